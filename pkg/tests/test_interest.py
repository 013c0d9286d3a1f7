from __future__ import annotations

import itertools

from hypothesis import given, strategies as st

from peepseek.interest import Metrics, judge, measure
from conftest import fixture_text


def test_measure_clamp_sequence_counts():
    seq = measure(fixture_text("clamp_vec_seq.ll"))
    opt = measure(fixture_text("clamp_vec_opt.ll"))
    assert seq.instruction_count == 4
    assert opt.instruction_count == seq.instruction_count - 1


def test_return_only_body_counts_zero():
    assert measure("define i8 @f(i8 %x) { entry: ret i8 %x }").instruction_count == 0


def test_measure_counts_across_blocks():
    text = """\
define i8 @f(i8 %x) {
entry:
  %a = add i8 %x, 1
  br label %next
next:
  %b = add i8 %a, 1
  ret i8 %b
}
"""
    assert measure(text).instruction_count == 2


def test_measure_with_failing_estimator_degrades():
    def broken(func):
        raise RuntimeError("no estimator here")
    m = measure(fixture_text("clamp_vec_seq.ll"), estimator=broken)
    assert m.total_cycles is None
    assert m.instruction_count == 4


def test_measure_with_estimator():
    m = measure(fixture_text("clamp_vec_seq.ll"), estimator=lambda f: 77)
    assert m.total_cycles == 77


def test_fewer_instructions_wins():
    d = judge(Metrics(5), Metrics(4), texts_differ=True)
    assert d.interesting and d.reason == "fewer-instructions"


def test_identical_canonical_texts_not_interesting():
    assert not judge(Metrics(4, 100), Metrics(4, 100), texts_differ=False).interesting


def test_equal_metrics_syntactic_difference():
    d = judge(Metrics(4, 100), Metrics(4, 100), texts_differ=True)
    assert d.interesting and d.reason == "syntactic-difference"


def test_more_instructions_but_fewer_cycles_is_interesting():
    d = judge(Metrics(4, 100), Metrics(5, 90), texts_differ=True)
    assert d.interesting and d.reason == "fewer-cycles"


def test_decision_table_exhaustive():
    counts = [(4, 3), (4, 4), (4, 5)]
    cycle_cases = [
        (None, None), (100, None), (None, 100),
        (100, 90), (100, 100), (100, 110),
    ]
    for (oc, cc), (ocy, ccy), differ in itertools.product(
            counts, cycle_cases, (False, True)):
        decision = judge(Metrics(oc, ocy), Metrics(cc, ccy), differ)
        if cc < oc:
            expected = "fewer-instructions"
        elif ocy is not None and ccy is not None and ccy < ocy:
            expected = "fewer-cycles"
        elif cc == oc and ((ocy is None and ccy is None) or
                           (ocy is not None and ccy is not None and ocy == ccy)) and differ:
            expected = "syntactic-difference"
        else:
            expected = None
        if expected is None:
            assert not decision.interesting, (oc, cc, ocy, ccy, differ)
        else:
            assert decision.interesting and decision.reason == expected, \
                (oc, cc, ocy, ccy, differ)


@given(st.integers(0, 50), st.integers(0, 50),
       st.one_of(st.none(), st.integers(0, 1000)),
       st.one_of(st.none(), st.integers(0, 1000)),
       st.booleans())
def test_strictly_worse_is_never_interesting(oc, delta, ocy, extra, differ):
    cc = oc + delta + 1
    ccy = None
    if ocy is not None and extra is not None:
        ccy = ocy + extra + 1
    decision = judge(Metrics(oc, ocy), Metrics(cc, ccy), differ)
    assert not decision.interesting


@given(st.integers(0, 50), st.one_of(st.none(), st.integers(0, 1000)),
       st.booleans())
def test_judge_total_and_pure(count, cycles, differ):
    a = judge(Metrics(count, cycles), Metrics(count, cycles), differ)
    b = judge(Metrics(count, cycles), Metrics(count, cycles), differ)
    assert a == b
    assert isinstance(a.interesting, bool)
