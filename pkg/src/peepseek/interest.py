"""Interestingness: does a preprocessed candidate plausibly manifest a
beneficial optimization?

Two metrics: non-terminator instruction count (the wrapping return is a
terminator and never counts) and, when the cycle estimator is enabled,
statically estimated total cycles. Fewer instructions or fewer cycles is
interesting; equal metrics with a canonical-text difference is also
interesting because it may enable downstream rewrites.
"""

from __future__ import annotations

from dataclasses import dataclass

from .ir.parser import parse_function_text
from .ir.types import Function


@dataclass(frozen=True)
class Metrics:
    instruction_count: int
    total_cycles: int | None = None

    def to_json(self) -> dict:
        return {"instruction_count": self.instruction_count,
                "total_cycles": self.total_cycles}


@dataclass(frozen=True)
class InterestDecision:
    interesting: bool
    reason: str = ""    # fewer-instructions | fewer-cycles | syntactic-difference


NOT_INTERESTING = InterestDecision(False)


def count_instructions(func: Function) -> int:
    return sum(
        1
        for bb in func.blocks
        for inst in bb.instructions
        if not inst.is_terminator
    )


def measure(func_or_text, estimator=None) -> Metrics:
    """Metrics for a function (or its text).

    ``estimator`` maps function text to a cycle count; any estimator
    failure degrades to count-only metrics instead of erroring.
    """
    if isinstance(func_or_text, Function):
        func = func_or_text
    else:
        func = parse_function_text(func_or_text)
    cycles = None
    if estimator is not None:
        try:
            cycles = estimator(func)
        except Exception:
            cycles = None
    return Metrics(count_instructions(func), cycles)


def judge(original: Metrics, candidate: Metrics, texts_differ: bool) -> InterestDecision:
    if candidate.instruction_count < original.instruction_count:
        return InterestDecision(True, "fewer-instructions")
    both_cycles = original.total_cycles is not None and candidate.total_cycles is not None
    if both_cycles and candidate.total_cycles < original.total_cycles:
        return InterestDecision(True, "fewer-cycles")
    cycles_tie = (
        (original.total_cycles is None and candidate.total_cycles is None)
        or (both_cycles and original.total_cycles == candidate.total_cycles)
    )
    if (candidate.instruction_count == original.instruction_count
            and cycles_tie and texts_differ):
        return InterestDecision(True, "syntactic-difference")
    return NOT_INTERESTING
