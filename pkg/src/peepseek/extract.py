"""Mining dependent instruction sequences from basic blocks.

A block is scanned in reverse; each non-terminator instruction is
prepended to every existing sequence that reads its result, and opens a
fresh singleton sequence when nothing does. The survivors are wrapped as
standalone functions, filtered when the external optimizer can already
improve them, digested, and deduplicated corpus-wide.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass

from .catalog import DigestSet
from .errors import ExtractError, ParseError, WrapError
from .ir.types import (
    BasicBlock, Function, Instruction, IrType, Module, ValueRef, VOID,
)
from .ir.parser import parse_module
from .ir.printer import print_function


@dataclass(frozen=True)
class InstrSeq:
    """A dependence-connected slice of one basic block, in block order."""

    source: tuple[str, str, str]          # (module id, function, block label)
    indices: tuple[int, ...]
    instructions: tuple[Instruction, ...]

    def __len__(self) -> int:
        return len(self.indices)


@dataclass(frozen=True)
class WrappedFunction:
    """An InstrSeq wrapped as a standalone function named ``src``."""

    func: Function
    origin: InstrSeq

    @property
    def text(self) -> str:
        return print_function(self.func)

    @property
    def canonical_text(self) -> str:
        return print_function(self.func, normalize_names=True)


@dataclass(frozen=True)
class SeqDigest:
    bytes: bytes

    def __post_init__(self):
        assert len(self.bytes) == 32

    @property
    def hex(self) -> str:
        return self.bytes.hex()


@dataclass
class ExtractConfig:
    seq_len_cap: int = 16
    memory_dependence: str = "off"        # off | conservative
    check_optimizable: bool = False
    preprocessor: object = None           # callable ir_text -> PreprocessResult


@dataclass
class ExtractStats:
    sequences_seen: int = 0
    deduped: int = 0
    filtered_optimizable: int = 0
    wrap_errors: int = 0
    over_cap: int = 0


def _depends_on(member: Instruction, inst: Instruction, conservative: bool) -> bool:
    if inst.result is not None and inst.result in member.local_operands():
        return True
    if conservative and inst.opcode == "store" and member.opcode == "load":
        return True
    return False


def extract_seqs_from_bb(bb: BasicBlock, source: tuple[str, str, str] = ("<ir>", "?", "?"),
                         memory_dependence: str = "off") -> list[InstrSeq]:
    """All dependent instruction sequences of one block.

    Terminators and phis never participate. With conservative memory
    dependence, a load additionally depends on every earlier store.
    """
    conservative = memory_dependence == "conservative"
    seqs: list[list[int]] = []
    insts = bb.instructions
    for i in range(len(insts) - 1, -1, -1):
        inst = insts[i]
        if inst.is_terminator or inst.opcode == "phi":
            continue
        added = False
        new_set: list[list[int]] = []
        for seq in seqs:
            if any(_depends_on(insts[j], inst, conservative) for j in seq):
                new_set.append([i] + seq)
                added = True
            else:
                new_set.append(seq)
        if not added:
            new_set.append([i])
        seqs = new_set
    return [
        InstrSeq(source, tuple(seq), tuple(insts[j] for j in seq))
        for seq in seqs
    ]


def wrap_as_func(seq: InstrSeq) -> WrappedFunction:
    """Wrap a sequence as ``define <ret> @src(<free operands>)``.

    Free operands (locals not defined inside the sequence) become
    parameters in first-use order with their use-site types; the return
    gives back the final instruction's result.
    """
    if not seq.instructions:
        raise WrapError("empty-sequence")
    last = seq.instructions[-1]
    if last.result is None or last.result_type is None or last.result_type.kind == "void":
        raise WrapError("void_result", f"final instruction '{last.opcode}' produces no value")
    if last.result_type.kind == "opaque":
        raise WrapError("untyped-result",
                        f"cannot reconstruct the type produced by '{last.opcode}'")
    defined = {inst.result for inst in seq.instructions if inst.result is not None}
    params: list[tuple[str, IrType]] = []
    seen: set[str] = set()
    for inst in seq.instructions:
        for op in inst.operands:
            if not op.is_local or op.name in defined or op.name in seen:
                continue
            if op.type is None or op.type.kind in ("opaque", "label", "void"):
                raise WrapError(
                    "untyped-operand",
                    f"cannot reconstruct the type of '%{op.name}' used by '{inst.opcode}'")
            seen.add(op.name)
            params.append((op.name, op.type))
    ret = Instruction(
        "ret", None, (), (last.result_type,),
        (ValueRef("local", name=last.result, type=last.result_type),),
        result_type=VOID)
    func = Function(
        name="src",
        params=tuple(params),
        return_type=last.result_type,
        blocks=(BasicBlock("entry", seq.instructions + (ret,)),),
    )
    _check_wrapped_ssa(func)
    return WrappedFunction(func, seq)


def _check_wrapped_ssa(func: Function) -> None:
    available = {name for name, _ in func.params}
    for inst in func.entry.instructions:
        for name in inst.local_operands():
            if name not in available:
                raise WrapError("use-before-def",
                                f"'%{name}' is read before it is defined")
        if inst.result is not None:
            available.add(inst.result)


def _encode_value(op: ValueRef, index: dict[str, int]) -> str:
    if op.kind == "local":
        if op.type is not None and op.type.kind == "label":
            return f"b{op.name}"
        return f"l{index[op.name]}"
    if op.kind == "global":
        return f"g{op.name}"
    ty = op.type
    if op.literal == "vector":
        return "v[" + ",".join(_encode_value(l, index) for l in op.lanes) + "]"
    if op.literal == "zeroinitializer":
        if ty is not None and ty.is_vector and ty.elem.is_int:
            return "v[" + ",".join(f"c{ty.elem.render()}:0" for _ in range(ty.lanes)) + "]"
        if ty is not None and ty.is_int:
            return f"c{ty.render()}:0"
        return "zeroinitializer"
    if op.literal == "float":
        return f"f{ty.render() if ty else '?'}:{op.text}"
    if op.literal:
        return f"{op.literal}:{ty.render() if ty else '?'}"
    if ty is not None and ty.is_int:
        return f"c{ty.render()}:{op.value % (1 << ty.bits)}"
    return f"c?:{op.value}"


def encode_function(f: Function) -> bytes:
    """Alpha-invariant canonical encoding: locals are replaced by their
    definition position (parameters first), constants by (type, value)."""
    index: dict[str, int] = {}
    for i, (name, _) in enumerate(f.params):
        index[name] = i
    counter = len(f.params)
    for bb in f.blocks:
        for inst in bb.instructions:
            if inst.result is not None:
                index[inst.result] = counter
                counter += 1
    parts = [f.return_type.render(), ";".join(ty.render() for _, ty in f.params)]
    for bb in f.blocks:
        for inst in bb.instructions:
            if inst.opaque:
                parts.append("opaque|" + inst.raw_text.strip())
                continue
            fields = [
                inst.opcode,
                ",".join(sorted(inst.flags)),
                inst.predicate or "",
                inst.callee or "",
                ",".join(ty.render() for ty in inst.type_args),
                ",".join(_encode_value(op, index) for op in inst.operands),
            ]
            parts.append("|".join(fields))
    return "\n".join(parts).encode("utf-8")


def digest(wrapped) -> SeqDigest:
    """32-byte content digest, stable across runs and local renamings."""
    func = wrapped.func if isinstance(wrapped, WrappedFunction) else wrapped
    return SeqDigest(hashlib.sha256(encode_function(func)).digest())


def extract(module: Module, dedup: DigestSet, config: ExtractConfig | None = None,
            stats: ExtractStats | None = None) -> list[WrappedFunction]:
    """Mine a whole module: per-block sequences, wrapped, filtered when the
    preprocessing adapter can still improve them, and deduplicated."""
    config = config or ExtractConfig()
    stats = stats if stats is not None else ExtractStats()
    out: list[WrappedFunction] = []
    for func in module.functions:
        for bb in func.blocks:
            source = (module.source_path, func.name, bb.label)
            for seq in extract_seqs_from_bb(bb, source, config.memory_dependence):
                stats.sequences_seen += 1
                if len(seq) > config.seq_len_cap:
                    stats.over_cap += 1
                    continue
                try:
                    wrapped = wrap_as_func(seq)
                except WrapError:
                    stats.wrap_errors += 1
                    continue
                if config.check_optimizable:
                    if _further_optimizable(wrapped, config):
                        stats.filtered_optimizable += 1
                        continue
                if not dedup.add_if_new(digest(wrapped).bytes):
                    stats.deduped += 1
                    continue
                out.append(wrapped)
    return out


def _further_optimizable(wrapped: WrappedFunction, config: ExtractConfig) -> bool:
    if config.preprocessor is None:
        raise ExtractError("opt", "optimizable filter enabled without a preprocessor")
    result = config.preprocessor(wrapped.canonical_text)
    if result.outcome != "optimized":
        # the wrapped function came from our own printer; a syntax rejection
        # here means the adapter itself is unusable
        raise ExtractError("opt", f"preprocessor rejected wrapped function: {result.message}")
    try:
        optimized = parse_module(result.text)
    except ParseError as e:
        raise ExtractError("opt", f"preprocessor output unparseable: {e}") from e
    if len(optimized.functions) != 1:
        return True
    return digest(optimized.functions[0]).bytes != digest(wrapped).bytes
