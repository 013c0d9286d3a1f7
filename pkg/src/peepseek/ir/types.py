"""Structural model of the supported textual LLVM IR subset.

Everything here is an immutable dataclass; parsed modules can be shared
freely across workers. Instructions outside the supported grammar are
retained verbatim with ``opaque=True`` so whole real-world modules survive
parsing.
"""

from __future__ import annotations

from dataclasses import dataclass

MAX_INT_WIDTH = 128

# Block-ending opcodes. Opaque instructions with these opcodes still count
# as terminators for block-shape validation.
TERMINATOR_OPCODES = frozenset({
    "ret", "br", "switch", "indirectbr", "invoke", "callbr", "resume",
    "unreachable", "cleanupret", "catchret", "catchswitch",
})

INT_BINOPS = frozenset({
    "add", "sub", "mul", "udiv", "sdiv", "urem", "srem",
    "and", "or", "xor", "shl", "lshr", "ashr",
})
FLOAT_BINOPS = frozenset({"fadd", "fsub", "fmul", "fdiv", "frem"})
CAST_OPCODES = frozenset({
    "zext", "sext", "trunc", "bitcast", "inttoptr", "ptrtoint",
    "fpext", "fptrunc", "fptosi", "fptoui", "sitofp", "uitofp",
    "addrspacecast",
})
ICMP_PREDICATES = frozenset({
    "eq", "ne", "ugt", "uge", "ult", "ule", "sgt", "sge", "slt", "sle",
})
FCMP_PREDICATES = frozenset({
    "false", "oeq", "ogt", "oge", "olt", "ole", "one", "ord",
    "ueq", "ugt", "uge", "ult", "ule", "une", "uno", "true",
})

# Canonical flag print order (LLVM's own ordering where it has one).
FLAG_ORDER = (
    "nneg", "nuw", "nsw", "exact", "disjoint", "inbounds", "nusw",
    "samesign", "fast", "nnan", "ninf", "nsz", "arcp", "contract",
    "afn", "reassoc",
)


def _flag_sort_key(flag: str) -> tuple:
    try:
        return (0, FLAG_ORDER.index(flag))
    except ValueError:
        return (1, flag)


def sort_flags(flags) -> tuple:
    return tuple(sorted(set(flags), key=_flag_sort_key))


@dataclass(frozen=True)
class IrType:
    """One of: integer, pointer, vector, float, void, label, opaque."""

    kind: str
    bits: int = 0                       # integer width
    lanes: int = 0                      # vector lane count
    elem: "IrType | None" = None        # vector element type
    float_kind: str = ""                # half | float | double
    text: str = ""                      # verbatim spelling for opaque types

    def __post_init__(self):
        if self.kind == "int" and not (1 <= self.bits <= MAX_INT_WIDTH):
            raise ValueError(f"integer width out of range: {self.bits}")
        if self.kind == "vector":
            if self.lanes < 1:
                raise ValueError("vector lane count must be >= 1")
            if self.elem is None or self.elem.kind not in ("int", "float", "ptr"):
                raise ValueError("vector elements must be scalar")

    @property
    def is_int(self) -> bool:
        return self.kind == "int"

    @property
    def is_vector(self) -> bool:
        return self.kind == "vector"

    def scalar(self) -> "IrType":
        """Element type for vectors, self otherwise."""
        return self.elem if self.kind == "vector" else self

    def render(self) -> str:
        if self.kind == "int":
            return f"i{self.bits}"
        if self.kind == "ptr":
            return "ptr"
        if self.kind == "vector":
            return f"<{self.lanes} x {self.elem.render()}>"
        if self.kind == "float":
            return self.float_kind
        if self.kind in ("void", "label"):
            return self.kind
        return self.text


VOID = IrType("void")
LABEL = IrType("label")
PTR = IrType("ptr")


def int_type(bits: int) -> IrType:
    return IrType("int", bits=bits)


def vector_type(lanes: int, elem: IrType) -> IrType:
    return IrType("vector", lanes=lanes, elem=elem)


I1 = int_type(1)


@dataclass(frozen=True)
class ValueRef:
    """An operand: SSA local, constant, or global symbol.

    Integer constant payloads are kept as exact Python ints (no
    truncation); ``literal`` distinguishes special spellings:
    "" plain integer, or one of zeroinitializer | undef | poison | null |
    vector | float.
    """

    kind: str                            # local | const | global
    name: str = ""
    type: IrType | None = None
    value: int | None = None
    literal: str = ""
    lanes: tuple["ValueRef", ...] = ()   # vector literal elements
    text: str = ""                       # verbatim float payloads

    @property
    def is_local(self) -> bool:
        return self.kind == "local"


def local(name: str, ty: IrType | None = None) -> ValueRef:
    return ValueRef("local", name=name, type=ty)


def const_int(value: int, ty: IrType) -> ValueRef:
    return ValueRef("const", type=ty, value=value)


@dataclass(frozen=True)
class Instruction:
    opcode: str
    result: str | None = None
    flags: tuple[str, ...] = ()
    type_args: tuple[IrType, ...] = ()
    operands: tuple[ValueRef, ...] = ()
    callee: str | None = None
    predicate: str | None = None
    metadata_text: str = ""              # trailing ", align 4"-style tail, verbatim
    opaque: bool = False
    raw_text: str = ""                   # verbatim source for opaque printing
    result_type: IrType | None = None

    @property
    def is_terminator(self) -> bool:
        return self.opcode in TERMINATOR_OPCODES

    def local_operands(self) -> tuple[str, ...]:
        """Names of non-label SSA locals read by this instruction."""
        out = []
        for op in self.operands:
            if op.is_local and (op.type is None or op.type.kind != "label"):
                out.append(op.name)
        return tuple(out)


@dataclass(frozen=True)
class BasicBlock:
    label: str
    instructions: tuple[Instruction, ...] = ()


@dataclass(frozen=True)
class Function:
    name: str
    params: tuple[tuple[str, IrType], ...] = ()
    return_type: IrType = VOID
    blocks: tuple[BasicBlock, ...] = ()
    prefix_text: str = ""                # linkage/cconv words, verbatim
    attrs_text: str = ""                 # trailing attribute tokens, verbatim

    @property
    def entry(self) -> BasicBlock:
        return self.blocks[0]

    def defined_names(self) -> set[str]:
        names = {p for p, _ in self.params}
        for bb in self.blocks:
            for inst in bb.instructions:
                if inst.result is not None:
                    names.add(inst.result)
        return names


@dataclass(frozen=True)
class Module:
    functions: tuple[Function, ...] = ()
    preamble_text: str = ""
    source_path: str = "<ir>"

    def function(self, name: str) -> Function:
        for f in self.functions:
            if f.name == name:
                return f
        raise KeyError(name)
