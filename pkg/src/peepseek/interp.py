"""Reference interpreter for the UB-free integer subset.

Two's-complement evaluation of single-block functions built from integer
binops, icmp, select, the casts, and the umin/umax/smin/smax/abs
intrinsics, scalar or fixed-vector. Division by zero and oversized shifts
trap (a deliberate, deterministic stand-in for poison); nsw/nuw flags are
ignored for value computation, so the interpreter judges strict
equivalence, not refinement.

Functions are compiled once into a slot program; scalar lanes are plain
ints, vectors are tuples of ints.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

from .errors import UnsupportedOpcode
from .ir.types import Function, Instruction, IrType, ValueRef

INT_BINOPS_EVAL = {
    "add", "sub", "mul", "udiv", "sdiv", "urem", "srem",
    "and", "or", "xor", "shl", "lshr", "ashr",
}
SUPPORTED_INTRINSIC_PREFIXES = (
    "llvm.umin.", "llvm.umax.", "llvm.smin.", "llvm.smax.", "llvm.abs.",
)


class TrapError(Exception):
    def __init__(self, reason: str):
        self.reason = reason
        super().__init__(reason)


@dataclass(frozen=True)
class BitValue:
    width: int
    value: int

    def __post_init__(self):
        if not (0 <= self.value < (1 << self.width)):
            raise ValueError(f"value {self.value} out of range for i{self.width}")

    @property
    def signed(self) -> int:
        if self.value >= 1 << (self.width - 1):
            return self.value - (1 << self.width)
        return self.value

    @classmethod
    def of_int(cls, width: int, raw: int) -> "BitValue":
        return cls(width, raw % (1 << width))


@dataclass(frozen=True)
class EvalResult:
    outcome: str                     # value | trap
    value: object = None             # BitValue or tuple[BitValue, ...]
    reason: str = ""

    @property
    def is_trap(self) -> bool:
        return self.outcome == "trap"

    def render(self) -> str:
        if self.is_trap:
            return f"trap({self.reason})"
        if isinstance(self.value, tuple):
            inner = ", ".join(str(v.value) for v in self.value)
            return f"<{inner}>"
        return str(self.value.value)


def _to_signed(v: int, w: int) -> int:
    return v - (1 << w) if v >= 1 << (w - 1) else v


def _scalar_binop(op: str, w: int):
    mask = (1 << w) - 1
    half = 1 << (w - 1)

    if op == "add":
        return lambda a, b: (a + b) & mask
    if op == "sub":
        return lambda a, b: (a - b) & mask
    if op == "mul":
        return lambda a, b: (a * b) & mask
    if op == "and":
        return lambda a, b: a & b
    if op == "or":
        return lambda a, b: a | b
    if op == "xor":
        return lambda a, b: a ^ b
    if op == "udiv":
        def udiv(a, b):
            if b == 0:
                raise TrapError("div-by-zero")
            return a // b
        return udiv
    if op == "urem":
        def urem(a, b):
            if b == 0:
                raise TrapError("div-by-zero")
            return a % b
        return urem
    if op == "sdiv":
        def sdiv(a, b):
            if b == 0:
                raise TrapError("div-by-zero")
            sa, sb = _to_signed(a, w), _to_signed(b, w)
            if sa == -half and sb == -1:
                raise TrapError("div-overflow")
            q = abs(sa) // abs(sb)
            if (sa < 0) != (sb < 0):
                q = -q
            return q & mask
        return sdiv
    if op == "srem":
        def srem(a, b):
            if b == 0:
                raise TrapError("div-by-zero")
            sa, sb = _to_signed(a, w), _to_signed(b, w)
            if sa == -half and sb == -1:
                raise TrapError("div-overflow")
            q = abs(sa) // abs(sb)
            if (sa < 0) != (sb < 0):
                q = -q
            return (sa - q * sb) & mask
        return srem
    if op == "shl":
        def shl(a, b):
            if b >= w:
                raise TrapError("shift-too-large")
            return (a << b) & mask
        return shl
    if op == "lshr":
        def lshr(a, b):
            if b >= w:
                raise TrapError("shift-too-large")
            return a >> b
        return lshr
    if op == "ashr":
        def ashr(a, b):
            if b >= w:
                raise TrapError("shift-too-large")
            return (_to_signed(a, w) >> b) & mask
        return ashr
    raise UnsupportedOpcode(op)


_ICMP_SCALAR = {
    "eq": lambda a, b, w: a == b,
    "ne": lambda a, b, w: a != b,
    "ugt": lambda a, b, w: a > b,
    "uge": lambda a, b, w: a >= b,
    "ult": lambda a, b, w: a < b,
    "ule": lambda a, b, w: a <= b,
    "sgt": lambda a, b, w: _to_signed(a, w) > _to_signed(b, w),
    "sge": lambda a, b, w: _to_signed(a, w) >= _to_signed(b, w),
    "slt": lambda a, b, w: _to_signed(a, w) < _to_signed(b, w),
    "sle": lambda a, b, w: _to_signed(a, w) <= _to_signed(b, w),
}


def _intrinsic_scalar(name: str, w: int):
    mask = (1 << w) - 1
    if name == "umin":
        return lambda a, b: min(a, b)
    if name == "umax":
        return lambda a, b: max(a, b)
    if name == "smin":
        return lambda a, b: a if _to_signed(a, w) <= _to_signed(b, w) else b
    if name == "smax":
        return lambda a, b: a if _to_signed(a, w) >= _to_signed(b, w) else b
    if name == "abs":
        # second operand (is_int_min_poison) is ignored: abs of the minimum
        # signed value wraps to itself
        return lambda a, b: a if _to_signed(a, w) >= 0 else (-_to_signed(a, w)) & mask
    raise UnsupportedOpcode(f"llvm.{name}")


def _int_info(ty: IrType, context: str) -> tuple[int, int]:
    """(lanes, width); lanes == 0 marks a scalar."""
    if ty.is_int:
        return 0, ty.bits
    if ty.is_vector and ty.elem.is_int:
        return ty.lanes, ty.elem.bits
    raise UnsupportedOpcode(f"{context}: non-integer type {ty.render()}")


def _const_value(op: ValueRef) -> object:
    ty = op.type
    if op.literal in ("undef", "poison"):
        raise UnsupportedOpcode(f"{op.literal} constant")
    if op.literal == "float" or op.literal == "null" or op.literal == "none":
        raise UnsupportedOpcode(f"constant '{op.literal or op.text}'")
    if op.literal == "zeroinitializer":
        lanes, _ = _int_info(ty, "zeroinitializer")
        return (0,) * lanes if lanes else 0
    if op.literal == "vector":
        vals = []
        for lane in op.lanes:
            v = _const_value(lane)
            if isinstance(v, tuple):
                raise UnsupportedOpcode("nested vector constant")
            vals.append(v)
        return tuple(vals)
    lanes, width = _int_info(ty, "integer constant")
    v = op.value % (1 << width)
    return (v,) * lanes if lanes else v


class CompiledFunction:
    """Slot program: params occupy the first slots, each instruction writes
    one more. Calling evaluates on raw ints / tuples and returns the raw
    result; traps raise TrapError."""

    def __init__(self, func: Function):
        self.func = func
        if len(func.blocks) != 1:
            raise UnsupportedOpcode("multi-block function")
        self.param_shapes = []          # (lanes, width) per param
        slots: dict[str, int] = {}
        for i, (name, ty) in enumerate(func.params):
            self.param_shapes.append(_int_info(ty, f"parameter %{name}"))
            slots[name] = i
        lanes, width = _int_info(func.return_type, "return type")
        self.n_params = len(func.params)
        self.steps = []
        body = func.entry.instructions
        if not body or body[-1].opcode != "ret" or not body[-1].operands:
            raise UnsupportedOpcode("function does not return a value")
        next_slot = self.n_params
        for inst in body[:-1]:
            step = self._compile_inst(inst, slots, next_slot)
            self.steps.append(step)
            slots[inst.result] = next_slot
            next_slot += 1
        self.n_slots = next_slot
        ret_op = body[-1].operands[0]
        self.ret_fetch = self._fetch(ret_op, slots)
        self.ret_shape = (lanes, width)

    # -- compilation helpers ------------------------------------------

    def _fetch(self, op: ValueRef, slots: dict[str, int]):
        if op.is_local:
            if op.name not in slots:
                raise UnsupportedOpcode(f"undefined value %{op.name}")
            idx = slots[op.name]
            return lambda vs: vs[idx]
        if op.kind == "global":
            raise UnsupportedOpcode(f"global @{op.name}")
        const = _const_value(op)
        return lambda vs: const

    def _compile_inst(self, inst: Instruction, slots, dst: int):
        if inst.opaque:
            raise UnsupportedOpcode(inst.opcode)
        op = inst.opcode
        if op in INT_BINOPS_EVAL:
            lanes, width = _int_info(inst.type_args[0], op)
            fn = _scalar_binop(op, width)
            a = self._fetch(inst.operands[0], slots)
            b = self._fetch(inst.operands[1], slots)
            if lanes:
                return lambda vs: vs.__setitem__(
                    dst, tuple(fn(x, y) for x, y in zip(a(vs), b(vs))))
            return lambda vs: vs.__setitem__(dst, fn(a(vs), b(vs)))
        if op == "icmp":
            lanes, width = _int_info(inst.type_args[0], op)
            cmp = _ICMP_SCALAR[inst.predicate]
            a = self._fetch(inst.operands[0], slots)
            b = self._fetch(inst.operands[1], slots)
            if lanes:
                return lambda vs: vs.__setitem__(
                    dst, tuple(int(cmp(x, y, width)) for x, y in zip(a(vs), b(vs))))
            return lambda vs: vs.__setitem__(dst, int(cmp(a(vs), b(vs), width)))
        if op == "select":
            cond_ty = inst.type_args[0]
            val_lanes, _ = _int_info(inst.type_args[1], op)
            c = self._fetch(inst.operands[0], slots)
            t = self._fetch(inst.operands[1], slots)
            e = self._fetch(inst.operands[2], slots)
            if cond_ty.is_vector:
                cl, cw = _int_info(cond_ty, op)
                if cw != 1 or cl != val_lanes:
                    raise UnsupportedOpcode("malformed vector select")
                return lambda vs: vs.__setitem__(
                    dst, tuple(x if k else y for k, x, y in zip(c(vs), t(vs), e(vs))))
            cl, cw = _int_info(cond_ty, op)
            if cw != 1:
                raise UnsupportedOpcode("select condition is not i1")
            return lambda vs: vs.__setitem__(dst, t(vs) if c(vs) & 1 else e(vs))
        if op in ("zext", "sext", "trunc"):
            src_lanes, src_w = _int_info(inst.type_args[0], op)
            dst_lanes, dst_w = _int_info(inst.type_args[1], op)
            if src_lanes != dst_lanes:
                raise UnsupportedOpcode(f"{op} changes lane count")
            a = self._fetch(inst.operands[0], slots)
            mask = (1 << dst_w) - 1
            if op == "zext":
                conv = lambda v: v
            elif op == "trunc":
                conv = lambda v: v & mask
            else:
                conv = lambda v: _to_signed(v, src_w) & mask
            if src_lanes:
                return lambda vs: vs.__setitem__(dst, tuple(conv(v) for v in a(vs)))
            return lambda vs: vs.__setitem__(dst, conv(a(vs)))
        if op == "call":
            callee = inst.callee or ""
            for prefix in SUPPORTED_INTRINSIC_PREFIXES:
                if callee.startswith(prefix):
                    name = prefix.split(".")[1]
                    break
            else:
                raise UnsupportedOpcode(f"call to @{callee}")
            lanes, width = _int_info(inst.type_args[0], op)
            fn = _intrinsic_scalar(name, width)
            want_args = 2
            if len(inst.operands) != want_args:
                raise UnsupportedOpcode(f"@{callee} with {len(inst.operands)} arguments")
            a = self._fetch(inst.operands[0], slots)
            if name == "abs":
                b = lambda vs: 0
            else:
                b = self._fetch(inst.operands[1], slots)
            if lanes:
                def vec_call(vs, a=a, b=b, fn=fn, lanes=lanes):
                    av, bv = a(vs), b(vs)
                    if not isinstance(av, tuple):
                        av = (av,) * lanes
                    if not isinstance(bv, tuple):
                        bv = (bv,) * lanes
                    vs[dst] = tuple(fn(x, y) for x, y in zip(av, bv))
                return vec_call
            return lambda vs: vs.__setitem__(dst, fn(a(vs), b(vs)))
        raise UnsupportedOpcode(op)

    def __call__(self, args: Sequence[object]) -> object:
        vs = list(args) + [None] * (self.n_slots - self.n_params)
        for step in self.steps:
            step(vs)
        return self.ret_fetch(vs)


def unsupported_reason(func: Function) -> str | None:
    """None when the interpreter can evaluate ``func``, else a reason."""
    try:
        CompiledFunction(func)
        return None
    except UnsupportedOpcode as e:
        return e.what


def _wrap_result(raw: object, shape: tuple[int, int]) -> object:
    lanes, width = shape
    if lanes:
        return tuple(BitValue(width, v) for v in raw)
    return BitValue(width, raw)


def eval_function(func: Function, args: Sequence[object]) -> EvalResult:
    """Evaluate on BitValue (or tuple-of-BitValue) arguments."""
    compiled = CompiledFunction(func)
    if len(args) != compiled.n_params:
        raise ValueError(f"expected {compiled.n_params} arguments, got {len(args)}")
    raw = []
    for arg, (lanes, width) in zip(args, compiled.param_shapes):
        if lanes:
            if len(arg) != lanes or any(v.width != width for v in arg):
                raise ValueError("argument does not match parameter type")
            raw.append(tuple(v.value for v in arg))
        else:
            if not isinstance(arg, BitValue) or arg.width != width:
                raise ValueError("argument does not match parameter type")
            raw.append(arg.value)
    try:
        out = compiled(raw)
    except TrapError as t:
        return EvalResult("trap", reason=t.reason)
    return EvalResult("value", _wrap_result(out, compiled.ret_shape))
