"""Canonical text rendering for parsed IR.

Printing is deterministic: equal structures render byte-identically.
``normalize_names=True`` renames every SSA local positionally (params
first, then results in definition order), which is the canonical form
used for digesting, diffing, and files handed to external tools.
"""

from __future__ import annotations

import re

from .types import Function, Instruction, Module, ValueRef, sort_flags

_BARE_NAME = re.compile(r"[0-9]+\Z|[-a-zA-Z$._][-a-zA-Z$._0-9]*\Z")


def _name(text: str) -> str:
    return text if _BARE_NAME.match(text) else f'"{text}"'


def render_value(v: ValueRef, rename: dict[str, str] | None = None) -> str:
    if v.kind == "local":
        name = v.name
        if rename is not None and (v.type is None or v.type.kind != "label"):
            name = rename.get(name, name)
        return "%" + _name(name)
    if v.kind == "global":
        return "@" + _name(v.name)
    if v.literal == "vector":
        inner = ", ".join(
            f"{lane.type.render()} {render_value(lane, rename)}" for lane in v.lanes)
        return f"<{inner}>"
    if v.literal == "float":
        return v.text
    if v.literal:
        return v.literal
    if v.type is not None and v.type.kind == "int" and v.type.bits == 1 \
            and v.value in (0, 1):
        return "true" if v.value else "false"
    return str(v.value)


def render_instruction(inst: Instruction, rename: dict[str, str] | None = None) -> str:
    if inst.opaque:
        return inst.raw_text

    def val(v: ValueRef) -> str:
        return render_value(v, rename)

    def typed(v: ValueRef) -> str:
        return f"{v.type.render()} {val(v)}"

    op = inst.opcode
    flags = [f for f in sort_flags(inst.flags)
             if f not in ("tail", "musttail", "notail")]
    flag_text = (" " + " ".join(flags)) if flags else ""
    parts: str
    if op == "call":
        tail = next((f for f in inst.flags if f in ("tail", "musttail", "notail")), None)
        args = ", ".join(typed(a) for a in inst.operands)
        head = f"{tail} call" if tail else "call"
        parts = (f"{head}{flag_text} {inst.type_args[0].render()} "
                 f"@{_name(inst.callee)}({args})")
    elif op == "icmp" or op == "fcmp":
        a, b = inst.operands
        parts = (f"{op}{flag_text} {inst.predicate} "
                 f"{inst.type_args[0].render()} {val(a)}, {val(b)}")
    elif op == "select":
        parts = "select" + flag_text + " " + ", ".join(typed(o) for o in inst.operands)
    elif op in ("zext", "sext", "trunc", "bitcast", "inttoptr", "ptrtoint",
                "fpext", "fptrunc", "fptosi", "fptoui", "sitofp", "uitofp",
                "addrspacecast"):
        parts = (f"{op}{flag_text} {inst.type_args[0].render()} "
                 f"{val(inst.operands[0])} to {inst.type_args[1].render()}")
    elif op == "load":
        parts = (f"load{flag_text} {inst.type_args[0].render()}, "
                 f"{inst.type_args[1].render()} {val(inst.operands[0])}")
    elif op == "store":
        v, p = inst.operands
        parts = (f"store{flag_text} {inst.type_args[0].render()} {val(v)}, "
                 f"{inst.type_args[1].render()} {val(p)}")
    elif op == "getelementptr":
        pieces = [f"{inst.type_args[0].render()}",
                  f"{inst.type_args[1].render()} {val(inst.operands[0])}"]
        for ty, idx in zip(inst.type_args[2:], inst.operands[1:]):
            pieces.append(f"{ty.render()} {val(idx)}")
        parts = f"getelementptr{flag_text} " + ", ".join(pieces)
    elif op == "ret":
        if not inst.operands:
            parts = "ret void"
        else:
            parts = f"ret {typed(inst.operands[0])}"
    elif op == "br":
        if len(inst.operands) == 1:
            parts = f"br label {val(inst.operands[0])}"
        else:
            c, t, e = inst.operands
            parts = f"br {typed(c)}, label {val(t)}, label {val(e)}"
    elif op == "phi":
        pairs = []
        ops = inst.operands
        for i in range(0, len(ops), 2):
            pairs.append(f"[ {val(ops[i])}, {val(ops[i + 1])} ]")
        parts = f"phi{flag_text} {inst.type_args[0].render()} " + ", ".join(pairs)
    elif op in ("fneg", "freeze"):
        parts = f"{op}{flag_text} {typed(inst.operands[0])}"
    elif op == "unreachable":
        parts = "unreachable"
    else:
        # generic binop shape: add/sub/.../fadd...
        a, b = inst.operands
        parts = f"{op}{flag_text} {inst.type_args[0].render()} {val(a)}, {val(b)}"

    if inst.result is not None:
        res = inst.result
        if rename is not None:
            res = rename.get(res, res)
        parts = f"%{_name(res)} = {parts}"
    return parts + inst.metadata_text


def _rename_map(f: Function) -> dict[str, str]:
    mapping: dict[str, str] = {}
    counter = 0
    for pname, _ in f.params:
        mapping[pname] = str(counter)
        counter += 1
    for bb in f.blocks:
        for inst in bb.instructions:
            if inst.result is not None:
                mapping[inst.result] = str(counter)
                counter += 1
    return mapping


def print_function(f: Function, normalize_names: bool = False) -> str:
    rename = _rename_map(f) if normalize_names else None
    params = ", ".join(
        f"{ty.render()} %{_name(rename[n] if rename else n)}" for n, ty in f.params)
    prefix = f"{f.prefix_text} " if f.prefix_text else ""
    attrs = f" {f.attrs_text}" if f.attrs_text else ""
    lines = [f"define {prefix}{f.return_type.render()} @{_name(f.name)}({params}){attrs} {{"]
    for bb in f.blocks:
        lines.append(f"{_name(bb.label)}:")
        for inst in bb.instructions:
            if inst.opaque:
                lines.append(f"  {inst.raw_text.strip()}")
            else:
                lines.append(f"  {render_instruction(inst, rename)}")
    lines.append("}")
    return "\n".join(lines) + "\n"


def print_module(m: Module, normalize_names: bool = False) -> str:
    parts = []
    if m.preamble_text:
        parts.append(m.preamble_text + "\n")
    for f in m.functions:
        parts.append(print_function(f, normalize_names))
    return "\n".join(parts)
