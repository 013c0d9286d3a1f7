"""Equivalence oracle built on the reference interpreter.

Small input spaces (total width <= 20 bits) are enumerated exhaustively in
lexicographic order, so the reported counterexample is the smallest one.
Larger spaces run a deterministic suite: all-zeros, all-ones, per-input
boundary values crossed with constants mined from both functions, then
seeded uniform samples up to the evaluation budget. A trap on both sides
for the same input counts as agreement; a trap on exactly one side is a
divergence.
"""

from __future__ import annotations

import itertools
import random
from dataclasses import dataclass

from .errors import PeepseekError, UnsupportedOpcode
from .interp import BitValue, CompiledFunction, EvalResult, TrapError
from .ir.types import Function, ValueRef

EXHAUSTIVE_BIT_LIMIT = 20
DEFAULT_BUDGET = 65536


class SignatureMismatch(PeepseekError):
    def __init__(self, src_sig: str, tgt_sig: str):
        self.src_sig = src_sig
        self.tgt_sig = tgt_sig
        super().__init__(f"function signatures differ: {src_sig} vs {tgt_sig}")


@dataclass(frozen=True)
class EquivalenceReport:
    verdict: str                     # equivalent | not-equivalent | unsupported
    mode: str = ""                   # exhaustive | sampled
    inputs_checked: int = 0
    inputs: tuple = ()               # per-param BitValue or tuple[BitValue, ...]
    src_out: EvalResult | None = None
    tgt_out: EvalResult | None = None
    unsupported_what: str = ""

    @property
    def is_equivalent(self) -> bool:
        return self.verdict == "equivalent"


def _signature(func: Function) -> str:
    params = ", ".join(ty.render() for _, ty in func.params)
    return f"{func.return_type.render()}({params})"


def _unit_widths(func: Function) -> list[tuple[int, int]]:
    """Flatten params into scalar units: (param index, width) per lane."""
    units = []
    for i, (_, ty) in enumerate(func.params):
        if ty.is_vector:
            units.extend((i, ty.elem.bits) for _ in range(ty.lanes))
        else:
            units.append((i, ty.bits))
    return units


def _regroup(point: tuple, func: Function) -> list[object]:
    """Turn a flat unit tuple back into per-param raw values."""
    out = []
    k = 0
    for _, ty in func.params:
        if ty.is_vector:
            out.append(tuple(point[k:k + ty.lanes]))
            k += ty.lanes
        else:
            out.append(point[k])
            k += 1
    return out


def _mined_constants(func: Function) -> list[int]:
    found = []

    def visit(op: ValueRef):
        if op.kind != "const":
            return
        if op.literal == "vector":
            for lane in op.lanes:
                visit(lane)
        elif not op.literal and op.value is not None:
            found.append(op.value)

    for bb in func.blocks:
        for inst in bb.instructions:
            for op in inst.operands:
                visit(op)
    return found


def boundary_values(width: int, mined: list[int]) -> list[int]:
    """Deterministic per-unit probe values: the structural corners plus
    every mined constant and both neighbours, reduced mod 2^width."""
    mask = (1 << width) - 1
    values = [0, 1, mask, 1 << (width - 1), (1 << (width - 1)) - 1]
    for c in mined:
        for v in (c - 1, c, c + 1):
            values.append(v & mask)
    seen = set()
    out = []
    for v in values:
        if v not in seen:
            seen.add(v)
            out.append(v)
    return out


def deterministic_suite(src: Function, tgt: Function, budget: int, seed: int):
    """Yield flat unit-value points: corners, boundary cross products
    (capped), then seeded uniform samples filling the budget."""
    units = _unit_widths(src)
    mined = _mined_constants(src) + _mined_constants(tgt)
    per_unit = [boundary_values(w, mined) for _, w in units]
    emitted = 0
    zeros = tuple(0 for _ in units)
    ones = tuple((1 << w) - 1 for _, w in units)
    for point in (zeros, ones):
        if emitted >= budget:
            return
        emitted += 1
        yield point
    for point in itertools.product(*per_unit):
        if emitted >= budget:
            return
        emitted += 1
        yield point
    rng = random.Random(seed)
    while emitted < budget:
        emitted += 1
        yield tuple(rng.randrange(1 << w) for _, w in units)


def _outcome(compiled: CompiledFunction, raw_args: list[object]) -> tuple[str, object]:
    try:
        return ("value", compiled(raw_args))
    except TrapError as t:
        return ("trap", t.reason)


def _to_eval_result(kind: str, payload: object, shape) -> EvalResult:
    if kind == "trap":
        return EvalResult("trap", reason=payload)
    lanes, width = shape
    if lanes:
        return EvalResult("value", tuple(BitValue(width, v) for v in payload))
    return EvalResult("value", BitValue(width, payload))


def _to_bitvalues(raw_args: list[object], func: Function) -> tuple:
    out = []
    for raw, (_, ty) in zip(raw_args, func.params):
        if ty.is_vector:
            out.append(tuple(BitValue(ty.elem.bits, v) for v in raw))
        else:
            out.append(BitValue(ty.bits, raw))
    return tuple(out)


def check_equivalence(src: Function, tgt: Function,
                      budget: int = DEFAULT_BUDGET, seed: int = 0) -> EquivalenceReport:
    """Decide equivalence of two same-signature functions by evaluation."""
    src_params = tuple(ty for _, ty in src.params)
    tgt_params = tuple(ty for _, ty in tgt.params)
    if src_params != tgt_params or src.return_type != tgt.return_type:
        raise SignatureMismatch(_signature(src), _signature(tgt))
    try:
        c_src = CompiledFunction(src)
        c_tgt = CompiledFunction(tgt)
    except UnsupportedOpcode as e:
        return EquivalenceReport("unsupported", unsupported_what=e.what)

    units = _unit_widths(src)
    total_bits = sum(w for _, w in units)
    if total_bits <= EXHAUSTIVE_BIT_LIMIT:
        mode = "exhaustive"
        points = itertools.product(*[range(1 << w) for _, w in units])
    else:
        mode = "sampled"
        points = deterministic_suite(src, tgt, budget, seed)

    checked = 0
    for point in points:
        checked += 1
        raw_args = _regroup(point, src)
        sk, sv = _outcome(c_src, list(raw_args))
        tk, tv = _outcome(c_tgt, list(raw_args))
        agree = (sk == "trap" and tk == "trap") or (sk == tk and sv == tv)
        if not agree:
            return EquivalenceReport(
                "not-equivalent", mode, checked,
                inputs=_to_bitvalues(raw_args, src),
                src_out=_to_eval_result(sk, sv, c_src.ret_shape),
                tgt_out=_to_eval_result(tk, tv, c_tgt.ret_shape))
    return EquivalenceReport("equivalent", mode, checked)


def replay_counterexample(src: Function, tgt: Function,
                          report: EquivalenceReport) -> bool:
    """True when re-evaluating the recorded inputs reproduces the divergence."""
    from .interp import eval_function
    s = eval_function(src, list(report.inputs))
    t = eval_function(tgt, list(report.inputs))
    if s.is_trap and t.is_trap:
        return False
    return s != t


def format_counterexample(src: Function, report: EquivalenceReport) -> str:
    """Textual block suitable as agent feedback."""
    lines = [f"Counterexample found by {report.mode} evaluation:"]
    for (name, ty), val in zip(src.params, report.inputs):
        if isinstance(val, tuple):
            payload = "<" + ", ".join(str(v.value) for v in val) + ">"
        else:
            payload = str(val.value)
        lines.append(f"  %{name} = {ty.render()} {payload}")
    lines.append(f"source returns:    {report.src_out.render()}")
    lines.append(f"candidate returns: {report.tgt_out.render()}")
    return "\n".join(lines)
