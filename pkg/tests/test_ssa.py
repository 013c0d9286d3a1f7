from __future__ import annotations

from peepseek.ir import parse_function_text, direct_uses


def block_of(text: str):
    return parse_function_text(text).blocks[0]


def test_single_use():
    bb = block_of(
        "define i8 @f(i8 %x, i8 %y, i8 %z) { entry: %a = add i8 %x, %y  "
        "%b = mul i8 %a, %z  ret i8 %b }")
    assert direct_uses(bb, 0) == {1}


def test_void_result_reports_empty_set():
    bb = block_of(
        "define void @f(i8 %v, ptr %p) { entry: store i8 %v, ptr %p  ret void }")
    assert direct_uses(bb, 0) == set()


def test_two_syntactic_uses():
    bb = block_of(
        "define i8 @f(i8 %x) { entry: %a = add i8 %x, 1  %d = xor i8 %a, 1  "
        "%e = or i8 %a, 2  ret i8 %d }")
    assert direct_uses(bb, 0) == {1, 2}


def test_terminator_use_is_reported():
    # direct_uses is a raw SSA query; the extractor, not this function,
    # decides that terminators never join sequences
    bb = block_of("define i8 @f(i8 %x) { entry: %a = add i8 %x, 1  ret i8 %a }")
    assert direct_uses(bb, 0) == {1}
