from __future__ import annotations

import itertools

import pytest

from peepseek.equiv import (
    SignatureMismatch, boundary_values, check_equivalence, deterministic_suite,
    format_counterexample, replay_counterexample,
)
from peepseek.interp import BitValue, eval_function
from peepseek.ir import parse_function_text

from conftest import fixture_text


def fn(text: str):
    return parse_function_text(text)


def fixture_fn(name: str):
    return fn(fixture_text(name))


def test_scalar_clamp_pair_equivalent_with_boundaries():
    src = fixture_fn("clamp_scalar_src.ll")
    tgt = fixture_fn("clamp_scalar_tgt.ll")
    report = check_equivalence(src, tgt)
    assert report.verdict == "equivalent"
    assert report.mode == "sampled"
    assert report.inputs_checked >= 65536
    suite_first_unit = {p[0] for p in deterministic_suite(src, tgt, 65536, 0)}
    for required in (0, 255, 256, (1 << 32) - 1, 1 << 31, (1 << 31) - 1):
        assert required in suite_first_unit


def test_redundant_umax_pair_exhaustive():
    report = check_equivalence(fixture_fn("redundant_umax_src.ll"),
                               fixture_fn("redundant_umax_tgt.ll"))
    assert report.verdict == "equivalent"
    assert report.mode == "exhaustive"
    assert report.inputs_checked == 256


def test_add_vs_or_smallest_counterexample():
    src = fn("define i8 @f(i8 %x, i8 %y) { entry: %r = add i8 %x, %y  ret i8 %r }")
    tgt = fn("define i8 @f(i8 %x, i8 %y) { entry: %r = or i8 %x, %y  ret i8 %r }")
    report = check_equivalence(src, tgt)
    assert report.verdict == "not-equivalent"
    assert report.mode == "exhaustive"
    assert tuple(v.value for v in report.inputs) == (1, 1)
    assert report.src_out.value.value == 2
    assert report.tgt_out.value.value == 1
    assert replay_counterexample(src, tgt, report)
    text = format_counterexample(src, report)
    assert "%x = i8 1" in text and "%y = i8 1" in text


def test_counterexample_is_lexicographically_smallest():
    src = fn("define i8 @f(i8 %x, i8 %y) { entry: %r = add i8 %x, %y  ret i8 %r }")
    tgt = fn("define i8 @f(i8 %x, i8 %y) { entry: %r = or i8 %x, %y  ret i8 %r }")
    report = check_equivalence(src, tgt)
    cx = tuple(v.value for v in report.inputs)
    # independent scan in lexicographic order
    for x, y in itertools.product(range(256), repeat=2):
        if (x + y) % 256 != (x | y):
            assert (x, y) == cx
            break


def test_trap_on_one_side_is_divergence():
    src = fn("define i8 @f(i8 %x, i8 %y) { entry: %r = udiv i8 %x, %y  ret i8 %r }")
    tgt = fn("define i8 @f(i8 %x, i8 %y) { entry: %r = add i8 %x, 0  ret i8 %r }")
    report = check_equivalence(src, tgt)
    assert report.verdict == "not-equivalent"
    assert tuple(v.value for v in report.inputs) == (0, 0)
    assert report.src_out.is_trap and not report.tgt_out.is_trap


def test_matching_traps_agree():
    text = "define i8 @f(i8 %x, i8 %y) { entry: %r = udiv i8 %x, %y  ret i8 %r }"
    report = check_equivalence(fn(text), fn(text))
    assert report.verdict == "equivalent"


def test_signature_mismatch_raises():
    a = fn("define i8 @f(i8 %x) { entry: %r = add i8 %x, 1  ret i8 %r }")
    b = fn("define i8 @f(i16 %x) { entry: %r = trunc i16 %x to i8  ret i8 %r }")
    with pytest.raises(SignatureMismatch):
        check_equivalence(a, b)


def test_unsupported_propagates():
    a = fn("define i32 @f(ptr %p) { entry: %v = load i32, ptr %p  ret i32 %v }")
    report = check_equivalence(a, a)
    assert report.verdict == "unsupported"
    assert report.unsupported_what


def test_fixed_seed_is_deterministic():
    src = fixture_fn("clamp_scalar_src.ll")
    tgt = fixture_fn("clamp_scalar_tgt.ll")
    r1 = check_equivalence(src, tgt, budget=2048, seed=7)
    r2 = check_equivalence(src, tgt, budget=2048, seed=7)
    assert r1 == r2
    suite1 = list(deterministic_suite(src, tgt, 512, 7))
    suite2 = list(deterministic_suite(src, tgt, 512, 7))
    assert suite1 == suite2


def test_equivalent_means_no_divergence_in_exhaustive_mode():
    src = fn("define i8 @f(i8 %x) { entry: %r = add i8 %x, %x  ret i8 %r }")
    tgt = fn("define i8 @f(i8 %x) { entry: %r = mul i8 %x, 2  ret i8 %r }")
    report = check_equivalence(src, tgt)
    assert report.verdict == "equivalent" and report.mode == "exhaustive"
    for x in range(256):
        a = eval_function(src, [BitValue(8, x)])
        b = eval_function(tgt, [BitValue(8, x)])
        assert a == b


def test_vector_signature_uses_sampling():
    src = fixture_fn("clamp_vec_seq.ll")
    tgt = fixture_fn("clamp_vec_opt.ll")
    report = check_equivalence(src, tgt, budget=4096)
    assert report.verdict == "equivalent"
    assert report.mode == "sampled"
    assert report.inputs_checked == 4096


def test_vector_divergence_reports_lane_inputs():
    src = fn("define <2 x i8> @f(<2 x i8> %v) { entry: "
             "%r = add <2 x i8> %v, <i8 1, i8 1>  ret <2 x i8> %r }")
    tgt = fn("define <2 x i8> @f(<2 x i8> %v) { entry: "
             "%r = or <2 x i8> %v, <i8 1, i8 1>  ret <2 x i8> %r }")
    report = check_equivalence(src, tgt)
    assert report.verdict == "not-equivalent"
    lanes = report.inputs[0]
    assert isinstance(lanes, tuple) and len(lanes) == 2
    assert replay_counterexample(src, tgt, report)


def test_boundary_values_include_mined_constants():
    vals = boundary_values(32, [255])
    for required in (0, 1, 254, 255, 256, (1 << 32) - 1, 1 << 31, (1 << 31) - 1):
        assert required in vals
