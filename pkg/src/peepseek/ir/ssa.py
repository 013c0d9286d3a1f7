"""SSA def-use queries over basic blocks."""

from __future__ import annotations

from .types import BasicBlock, Instruction


def uses_value(inst: Instruction, name: str) -> bool:
    """True when ``inst`` reads the SSA local ``name`` as an operand."""
    return name in inst.local_operands()


def direct_uses(bb: BasicBlock, inst_index: int) -> set[int]:
    """Indices of later instructions in ``bb`` that read the result of the
    instruction at ``inst_index``. Empty for void-producing instructions."""
    inst = bb.instructions[inst_index]
    if inst.result is None:
        return set()
    return {
        j for j in range(inst_index + 1, len(bb.instructions))
        if uses_value(bb.instructions[j], inst.result)
    }


def defined_before(bb: BasicBlock) -> list[set[str]]:
    """For each index, the set of local names defined earlier in the block."""
    out = []
    seen: set[str] = set()
    for inst in bb.instructions:
        out.append(set(seen))
        if inst.result is not None:
            seen.add(inst.result)
    return out
