"""Recursive-descent parser for the supported textual LLVM IR subset.

Token-based rather than line-based, so whole functions on a single line
parse fine. Anything outside the supported instruction grammar is kept
verbatim as an ``opaque`` instruction with best-effort operands, and any
top-level construct other than ``define`` lands in the module preamble,
so real-world modules survive parsing.
"""

from __future__ import annotations

import dataclasses
import re

from ..errors import ParseError
from .lexer import Lexer, Token
from .types import (
    CAST_OPCODES, FCMP_PREDICATES, FLOAT_BINOPS, ICMP_PREDICATES,
    INT_BINOPS, MAX_INT_WIDTH, TERMINATOR_OPCODES,
    BasicBlock, Function, Instruction, IrType, Module, ValueRef,
    I1, LABEL, PTR, VOID, int_type, sort_flags, vector_type,
)

_INT_TYPE_RE = re.compile(r"i([0-9]+)\Z")
_FLOAT_TYPE_NAMES = {"half", "bfloat", "float", "double", "fp128", "x86_fp80", "ppc_fp128"}

_INT_BINOP_FLAGS = {"nuw", "nsw", "exact", "disjoint"}
_FMF_FLAGS = {"fast", "nnan", "ninf", "nsz", "arcp", "contract", "afn", "reassoc"}
_GEP_FLAGS = {"inbounds", "nuw", "nusw"}
_CAST_FLAGS = {"nneg", "nuw", "nsw"}

# Parameter/return attributes we recognise and discard. Entries mapping to
# "paren" consume a parenthesised argument, "int" a following integer.
_PARAM_ATTRS = {
    "zeroext": None, "signext": None, "inreg": None, "noalias": None,
    "nocapture": None, "nofree": None, "nest": None, "returned": None,
    "nonnull": None, "noundef": None, "readnone": None, "readonly": None,
    "writeonly": None, "writable": None, "immarg": None,
    "dead_on_unwind": None, "dead_on_return": None, "swiftself": None,
    "align": "int", "dereferenceable": "paren", "dereferenceable_or_null": "paren",
    "byval": "paren", "byref": "paren", "sret": "paren", "inalloca": "paren",
    "preallocated": "paren", "elementtype": "paren", "alignstack": "paren",
    "allocalign": None, "allocptr": None, "captures": "paren", "range": "paren",
    "initializes": "paren",
}

_CALL_TAIL_ATTRS = {
    "nounwind", "readnone", "readonly", "willreturn", "memory",
    "norecurse", "nosync", "nofree", "speculatable", "convergent",
}

_KNOWN_OPCODES = (
    INT_BINOPS | FLOAT_BINOPS | CAST_OPCODES
    | {"icmp", "fcmp", "select", "call", "load", "store", "getelementptr",
       "ret", "br", "phi", "fneg", "freeze", "unreachable"}
)

# Opcode names valid after "%x = " even though we parse them opaquely;
# used only to distinguish "unknown opcode" from "not an opcode at all".
_OPCODE_SHAPED = re.compile(r"[a-z][a-z0-9_.]*\Z")


class _UnmodeledCall(Exception):
    """Internal: this call form is kept verbatim rather than modeled."""


class Parser:
    def __init__(self, source: str, filename: str = "<ir>"):
        self.source = source
        self.filename = filename
        self.lexer = Lexer(source, filename)
        self.toks = self.lexer.tokens()
        self.pos = 0

    # -- token plumbing -------------------------------------------------

    def peek(self, ahead: int = 0) -> Token:
        j = min(self.pos + ahead, len(self.toks) - 1)
        return self.toks[j]

    def advance(self) -> Token:
        tok = self.toks[self.pos]
        if tok.kind != "eof":
            self.pos += 1
        return tok

    def error(self, message: str, tok: Token | None = None) -> ParseError:
        tok = tok or self.peek()
        return self.lexer.error(message, tok.line, tok.column)

    def expect_punct(self, text: str) -> Token:
        tok = self.peek()
        if tok.kind != "punct" or tok.text != text:
            raise self.error(f"expected '{text}'", tok)
        return self.advance()

    def at_punct(self, text: str, ahead: int = 0) -> bool:
        tok = self.peek(ahead)
        return tok.kind == "punct" and tok.text == text

    def at_ident(self, text: str, ahead: int = 0) -> bool:
        tok = self.peek(ahead)
        return tok.kind == "ident" and tok.text == text

    # -- types ----------------------------------------------------------

    def at_type_start(self) -> bool:
        tok = self.peek()
        if tok.kind == "punct" and tok.text in ("<", "[", "{"):
            return True
        if tok.kind == "local":
            # named struct type like %struct.foo in type position
            return False
        if tok.kind != "ident":
            return False
        if _INT_TYPE_RE.match(tok.text):
            return True
        return tok.text in _FLOAT_TYPE_NAMES or tok.text in ("ptr", "void", "label", "x86_mmx", "x86_amx", "token", "metadata")

    def parse_type(self) -> IrType:
        tok = self.peek()
        ty = self._parse_base_type()
        # legacy typed pointers: any number of trailing stars collapse to ptr
        while self.at_punct("*"):
            self.advance()
            ty = PTR
        if ty is None:
            raise self.error("expected type", tok)
        return ty

    def _parse_base_type(self) -> IrType | None:
        tok = self.peek()
        if tok.kind == "ident":
            m = _INT_TYPE_RE.match(tok.text)
            if m:
                self.advance()
                bits = int(m.group(1))
                if 1 <= bits <= MAX_INT_WIDTH:
                    return int_type(bits)
                return IrType("opaque", text=tok.text)
            if tok.text in _FLOAT_TYPE_NAMES:
                self.advance()
                return IrType("float", float_kind=tok.text)
            if tok.text == "ptr":
                self.advance()
                if self.at_ident("addrspace"):
                    self._skip_balanced_after_ident()
                return PTR
            if tok.text == "void":
                self.advance()
                return VOID
            if tok.text == "label":
                self.advance()
                return LABEL
            if tok.text in ("x86_mmx", "x86_amx", "token", "metadata"):
                self.advance()
                return IrType("opaque", text=tok.text)
            return None
        if tok.kind == "punct" and tok.text == "<":
            if self.at_ident("vscale", 1):
                return self._opaque_type_slice()
            self.advance()
            count_tok = self.advance()
            if count_tok.kind != "int":
                raise self.error("expected vector lane count", count_tok)
            if not self.at_ident("x"):
                raise self.error("expected 'x' in vector type")
            self.advance()
            elem = self.parse_type()
            self.expect_punct(">")
            lanes = int(count_tok.text)
            if lanes < 1:
                raise self.error("vector lane count must be >= 1", count_tok)
            if elem.kind not in ("int", "float", "ptr"):
                return IrType("opaque", text=f"<{lanes} x {elem.render()}>")
            return vector_type(lanes, elem)
        if tok.kind == "punct" and tok.text in ("[", "{"):
            return self._opaque_type_slice()
        if tok.kind == "local":
            self.advance()
            return IrType("opaque", text="%" + tok.text)
        return None

    def _opaque_type_slice(self) -> IrType:
        """Consume a bracketed type we do not model and keep its spelling."""
        open_tok = self.advance()
        pairs = {"<": ">", "[": "]", "{": "}"}
        close = pairs[open_tok.text]
        depth = 1
        last = open_tok
        while depth > 0:
            tok = self.advance()
            if tok.kind == "eof":
                raise self.error("unterminated type", open_tok)
            if tok.kind == "punct" and tok.text in pairs:
                depth += 1
            elif tok.kind == "punct" and tok.text == close:
                depth -= 1
            last = tok
        end = self.peek().pos
        text = self.source[open_tok.pos:end].strip()
        # trailing stars handled by caller
        return IrType("opaque", text=text)

    def _skip_balanced_after_ident(self):
        """Skip ``ident ( ... )``; the ident is the current token."""
        self.advance()
        if self.at_punct("("):
            depth = 0
            while True:
                tok = self.advance()
                if tok.kind == "eof":
                    raise self.error("unterminated attribute argument", tok)
                if tok.kind == "punct" and tok.text == "(":
                    depth += 1
                elif tok.kind == "punct" and tok.text == ")":
                    depth -= 1
                    if depth == 0:
                        break

    # -- values ----------------------------------------------------------

    def parse_value(self, ty: IrType | None) -> ValueRef:
        tok = self.peek()
        if tok.kind == "local":
            self.advance()
            return ValueRef("local", name=tok.text, type=ty)
        if tok.kind == "global":
            self.advance()
            return ValueRef("global", name=tok.text, type=ty)
        if tok.kind == "int":
            self.advance()
            return ValueRef("const", type=ty, value=int(tok.text))
        if tok.kind == "float":
            self.advance()
            return ValueRef("const", type=ty, literal="float", text=tok.text)
        if tok.kind == "ident":
            if tok.text == "zeroinitializer":
                self.advance()
                return ValueRef("const", type=ty, literal="zeroinitializer")
            if tok.text in ("undef", "poison", "null", "none"):
                self.advance()
                return ValueRef("const", type=ty, literal=tok.text)
            if tok.text == "true":
                self.advance()
                return ValueRef("const", type=ty, value=1)
            if tok.text == "false":
                self.advance()
                return ValueRef("const", type=ty, value=0)
            if tok.text == "splat":
                self.advance()
                self.expect_punct("(")
                elem_ty = self.parse_type()
                elem = self.parse_value(elem_ty)
                self.expect_punct(")")
                if ty is None or not ty.is_vector:
                    raise self.error("splat requires a vector type", tok)
                return ValueRef("const", type=ty, literal="vector",
                                lanes=tuple([elem] * ty.lanes))
        if tok.kind == "punct" and tok.text == "<":
            self.advance()
            lanes = []
            while not self.at_punct(">"):
                elem_ty = self.parse_type()
                lanes.append(self.parse_value(elem_ty))
                if self.at_punct(","):
                    self.advance()
            self.expect_punct(">")
            return ValueRef("const", type=ty, literal="vector", lanes=tuple(lanes))
        raise self.error("expected value", tok)

    # -- module ----------------------------------------------------------

    def parse_module(self) -> Module:
        functions: list[Function] = []
        preamble_parts: list[str] = []
        depth = 0
        seg_start: int | None = None
        pairs_open = {"(", "{", "[", "<"}
        pairs_close = {")", "}", "]", ">"}
        while True:
            tok = self.peek()
            if tok.kind == "eof":
                if seg_start is not None:
                    preamble_parts.append(self.source[seg_start:tok.pos].strip())
                break
            if depth == 0 and tok.kind == "ident" and tok.text == "define":
                if seg_start is not None:
                    preamble_parts.append(self.source[seg_start:tok.pos].strip())
                    seg_start = None
                functions.append(self.parse_function())
                continue
            if seg_start is None:
                seg_start = tok.pos
            if tok.kind == "punct":
                if tok.text in pairs_open:
                    depth += 1
                elif tok.text in pairs_close:
                    depth = max(depth - 1, 0)
            self.advance()
        names = set()
        for f in functions:
            if f.name in names:
                raise ParseError(f"function '@{f.name}' multiply defined", 1, 1,
                                 filename=self.filename)
            names.add(f.name)
        preamble = "\n".join(p for p in preamble_parts if p)
        return Module(tuple(functions), preamble, self.filename)

    # -- functions ---------------------------------------------------------

    def parse_function(self) -> Function:
        define_tok = self.advance()
        assert define_tok.text == "define"
        prefix_words = []
        while self.peek().kind == "ident" and not self.at_type_start():
            prefix_words.append(self.advance().text)
        ret_type = self.parse_type()
        name_tok = self.peek()
        if name_tok.kind != "global":
            raise self.error("expected function name", name_tok)
        self.advance()
        self.expect_punct("(")
        params: list[tuple[str, IrType]] = []
        unnamed = 0
        while not self.at_punct(")"):
            if self.at_punct("..."):
                self.advance()
                prefix_words.append("...")  # remembered but not modelled
                break
            pty = self.parse_type()
            self._skip_param_attrs()
            tok = self.peek()
            if tok.kind == "local":
                self.advance()
                pname = tok.text
            else:
                pname = str(unnamed)
            unnamed += 1
            params.append((pname, pty))
            if self.at_punct(","):
                self.advance()
        self.expect_punct(")")
        attr_start = self.peek().pos
        while not self.at_punct("{"):
            tok = self.peek()
            if tok.kind == "eof":
                raise self.error("unterminated function: expected '{'", tok)
            self.advance()
        attrs_text = self.source[attr_start:self.peek().pos].strip()
        self.expect_punct("{")
        blocks = self._parse_blocks(name_tok.text)
        func = Function(
            name=name_tok.text,
            params=tuple(params),
            return_type=ret_type,
            blocks=tuple(blocks),
            prefix_text=" ".join(w for w in prefix_words if w != "..."),
            attrs_text=attrs_text,
        )
        self._validate_function(func, name_tok)
        return func

    def _skip_param_attrs(self):
        while True:
            tok = self.peek()
            if tok.kind == "attrgroup":
                self.advance()
                continue
            if tok.kind != "ident" or tok.text not in _PARAM_ATTRS:
                return
            action = _PARAM_ATTRS[tok.text]
            if action == "int":
                self.advance()
                if self.peek().kind == "int":
                    self.advance()
            elif action == "paren":
                self._skip_balanced_after_ident()
            else:
                self.advance()

    def _parse_blocks(self, func_name: str) -> list[BasicBlock]:
        blocks: list[BasicBlock] = []
        label: str | None = None
        insts: list[Instruction] = []

        def close_block(end_tok: Token):
            nonlocal label, insts
            if label is None and not insts:
                return
            blk_label = label if label is not None else "entry"
            if not insts:
                raise self.error(f"empty basic block '{blk_label}'", end_tok)
            term_indices = [i for i, inst in enumerate(insts) if inst.is_terminator]
            if not term_indices:
                raise self.error(
                    f"basic block '{blk_label}' has no terminator", end_tok)
            if term_indices != [len(insts) - 1]:
                bad = insts[term_indices[0]]
                raise self.error(
                    f"terminator is not the last instruction in block '{blk_label}'",
                    end_tok)
            blocks.append(BasicBlock(blk_label, tuple(insts)))
            label = None
            insts = []

        while True:
            tok = self.peek()
            if tok.kind == "eof":
                raise self.error(f"unterminated function '@{func_name}'", tok)
            if tok.kind == "punct" and tok.text == "}":
                self.advance()
                close_block(tok)
                break
            if tok.kind in ("ident", "int", "string") and self.at_punct(":", 1):
                close_block(tok)
                label = self.advance().text
                self.advance()  # ':'
                continue
            if label is None and not blocks and not insts:
                label = "entry"
            insts.append(self.parse_instruction())
        if not blocks:
            raise self.error(f"function '@{func_name}' has no basic blocks")
        return blocks

    def _validate_function(self, func: Function, name_tok: Token):
        seen = set()
        for pname, _ in func.params:
            if pname in seen:
                raise self.error(f"parameter '%{pname}' multiply defined", name_tok)
            seen.add(pname)
        labels = set()
        for bb in func.blocks:
            if bb.label in labels:
                raise self.error(f"block label '{bb.label}' multiply defined", name_tok)
            labels.add(bb.label)
            for inst in bb.instructions:
                if inst.result is None:
                    continue
                if inst.result in seen:
                    raise self.error(
                        f"'%{inst.result}' defined more than once", name_tok)
                seen.add(inst.result)

    # -- instructions ------------------------------------------------------

    def parse_instruction(self) -> Instruction:
        start = self.peek()
        result = None
        if start.kind == "local" and self.at_punct("=", 1):
            result = start.text
            self.advance()
            self.advance()
        op_tok = self.peek()
        if op_tok.kind != "ident" or not _OPCODE_SHAPED.match(op_tok.text):
            raise self.error("expected instruction opcode", op_tok)
        opcode = op_tok.text
        if opcode in ("tail", "musttail", "notail") and self.at_ident("call", 1):
            inst = self._parse_call(result, tail=opcode)
        elif opcode == "call":
            inst = self._parse_call(result, tail=None)
        elif opcode in _KNOWN_OPCODES:
            self.advance()
            inst = self._parse_known(opcode, result, op_tok)
        else:
            inst = self._parse_opaque(start, op_tok, result)
        if inst is None:
            inst = self._parse_opaque(start, op_tok, result)
        if inst.result is None and not inst.opaque and inst.result_type is not None \
                and inst.result_type.kind != "void" and inst.opcode not in TERMINATOR_OPCODES:
            # value-producing instruction written without a binding; keep it
            # referencable so SSA queries stay total
            inst = dataclasses.replace(inst, result=f"unused.{op_tok.pos}")
        return inst

    def _parse_known(self, opcode: str, result, op_tok: Token) -> Instruction | None:
        if opcode in INT_BINOPS:
            flags = self._collect_flags(_INT_BINOP_FLAGS)
            ty = self.parse_type()
            a = self.parse_value(ty)
            self.expect_punct(",")
            b = self.parse_value(ty)
            return self._finish(Instruction(
                opcode, result, flags, (ty,), (a, b), result_type=ty))
        if opcode in FLOAT_BINOPS:
            flags = self._collect_flags(_FMF_FLAGS)
            ty = self.parse_type()
            a = self.parse_value(ty)
            self.expect_punct(",")
            b = self.parse_value(ty)
            return self._finish(Instruction(
                opcode, result, flags, (ty,), (a, b), result_type=ty))
        if opcode in ("fneg", "freeze"):
            flags = self._collect_flags(_FMF_FLAGS) if opcode == "fneg" else ()
            ty = self.parse_type()
            a = self.parse_value(ty)
            return self._finish(Instruction(
                opcode, result, flags, (ty,), (a,), result_type=ty))
        if opcode == "icmp":
            flags = self._collect_flags({"samesign"})
            pred_tok = self.advance()
            if pred_tok.kind != "ident" or pred_tok.text not in ICMP_PREDICATES:
                raise self.error("expected icmp predicate", pred_tok)
            ty = self.parse_type()
            a = self.parse_value(ty)
            self.expect_punct(",")
            b = self.parse_value(ty)
            rt = vector_type(ty.lanes, I1) if ty.is_vector else I1
            return self._finish(Instruction(
                opcode, result, flags, (ty,), (a, b),
                predicate=pred_tok.text, result_type=rt))
        if opcode == "fcmp":
            flags = self._collect_flags(_FMF_FLAGS)
            pred_tok = self.advance()
            if pred_tok.kind != "ident" or pred_tok.text not in FCMP_PREDICATES:
                raise self.error("expected fcmp predicate", pred_tok)
            ty = self.parse_type()
            a = self.parse_value(ty)
            self.expect_punct(",")
            b = self.parse_value(ty)
            rt = vector_type(ty.lanes, I1) if ty.is_vector else I1
            return self._finish(Instruction(
                opcode, result, flags, (ty,), (a, b),
                predicate=pred_tok.text, result_type=rt))
        if opcode == "select":
            flags = self._collect_flags(_FMF_FLAGS)
            t1 = self.parse_type()
            v1 = self.parse_value(t1)
            self.expect_punct(",")
            t2 = self.parse_type()
            v2 = self.parse_value(t2)
            self.expect_punct(",")
            t3 = self.parse_type()
            v3 = self.parse_value(t3)
            return self._finish(Instruction(
                opcode, result, flags, (t1, t2, t3), (v1, v2, v3), result_type=t2))
        if opcode in CAST_OPCODES:
            flags = self._collect_flags(_CAST_FLAGS)
            t1 = self.parse_type()
            v = self.parse_value(t1)
            if not self.at_ident("to"):
                raise self.error("expected 'to' in cast")
            self.advance()
            t2 = self.parse_type()
            return self._finish(Instruction(
                opcode, result, flags, (t1, t2), (v,), result_type=t2))
        if opcode == "load":
            flags = self._collect_flags({"volatile", "atomic"})
            ty = self.parse_type()
            self.expect_punct(",")
            pty = self.parse_type()
            pv = self.parse_value(pty)
            ordering = self._consume_atomic_ordering()
            return self._finish(Instruction(
                opcode, result, flags, (ty, pty), (pv,),
                metadata_text=ordering, result_type=ty), meta_already=bool(ordering))
        if opcode == "store":
            flags = self._collect_flags({"volatile", "atomic"})
            ty = self.parse_type()
            v = self.parse_value(ty)
            self.expect_punct(",")
            pty = self.parse_type()
            pv = self.parse_value(pty)
            if result is not None:
                raise self.error("store cannot produce a result", op_tok)
            ordering = self._consume_atomic_ordering()
            return self._finish(Instruction(
                opcode, None, flags, (ty, pty), (v, pv),
                metadata_text=ordering, result_type=VOID), meta_already=bool(ordering))
        if opcode == "getelementptr":
            flags = self._collect_flags(_GEP_FLAGS)
            if self.at_ident("inrange"):
                self._skip_balanced_after_ident()
            ty = self.parse_type()
            self.expect_punct(",")
            pty = self.parse_type()
            base = self.parse_value(pty)
            operands = [base]
            type_args = [ty, pty]
            while self.at_punct(","):
                save = self.pos
                self.advance()
                if not self.at_type_start():
                    self.pos = save
                    break
                ity = self.parse_type()
                operands.append(self.parse_value(ity))
                type_args.append(ity)
            return self._finish(Instruction(
                opcode, result, flags, tuple(type_args), tuple(operands),
                result_type=PTR))
        if opcode == "ret":
            if self.at_ident("void"):
                self.advance()
                return self._finish(Instruction(
                    opcode, None, (), (VOID,), (), result_type=VOID))
            ty = self.parse_type()
            v = self.parse_value(ty)
            return self._finish(Instruction(
                opcode, None, (), (ty,), (v,), result_type=VOID))
        if opcode == "br":
            if self.at_ident("label"):
                self.advance()
                dest = self.parse_value(LABEL)
                return self._finish(Instruction(
                    opcode, None, (), (LABEL,), (dest,), result_type=VOID))
            cty = self.parse_type()
            cond = self.parse_value(cty)
            self.expect_punct(",")
            if not self.at_ident("label"):
                raise self.error("expected 'label' in br")
            self.advance()
            then_dest = self.parse_value(LABEL)
            self.expect_punct(",")
            if not self.at_ident("label"):
                raise self.error("expected 'label' in br")
            self.advance()
            else_dest = self.parse_value(LABEL)
            return self._finish(Instruction(
                opcode, None, (), (cty,), (cond, then_dest, else_dest),
                result_type=VOID))
        if opcode == "phi":
            flags = self._collect_flags(_FMF_FLAGS)
            ty = self.parse_type()
            operands = []
            while True:
                self.expect_punct("[")
                operands.append(self.parse_value(ty))
                self.expect_punct(",")
                lbl = self.peek()
                if lbl.kind != "local":
                    raise self.error("expected predecessor label", lbl)
                self.advance()
                operands.append(ValueRef("local", name=lbl.text, type=LABEL))
                self.expect_punct("]")
                if self.at_punct(","):
                    self.advance()
                    continue
                break
            return self._finish(Instruction(
                opcode, result, flags, (ty,), tuple(operands), result_type=ty))
        if opcode == "unreachable":
            return self._finish(Instruction(
                opcode, None, (), (), (), result_type=VOID))
        return None

    def _parse_call(self, result, tail: str | None) -> Instruction | None:
        save = self.pos
        if tail is not None:
            self.advance()
        call_tok = self.advance()
        try:
            flags = self._collect_flags(_FMF_FLAGS)
            ret_ty = self.parse_type()
            callee_tok = self.peek()
            if callee_tok.kind != "global":
                # indirect call, or a vararg call spelled with an explicit
                # function type: retain verbatim
                raise _UnmodeledCall()
            self.advance()
            self.expect_punct("(")
            args = []
            type_args = [ret_ty]
            while not self.at_punct(")"):
                aty = self.parse_type()
                self._skip_param_attrs()
                args.append(self.parse_value(aty))
                type_args.append(aty)
                if self.at_punct(","):
                    self.advance()
            self.expect_punct(")")
            tail_attrs = []
            while True:
                tok = self.peek()
                if tok.kind == "attrgroup":
                    tail_attrs.append(tok.text)
                    self.advance()
                elif tok.kind == "ident" and tok.text in _CALL_TAIL_ATTRS:
                    tail_attrs.append(tok.text)
                    self.advance()
                else:
                    break
            meta = " " + " ".join(tail_attrs) if tail_attrs else ""
            all_flags = flags + ((tail,) if tail else ())
            if result is not None and ret_ty.kind == "void":
                raise self.error("void call cannot produce a result", call_tok)
            inst = Instruction(
                "call", result if ret_ty.kind != "void" else None,
                sort_flags(all_flags), tuple(type_args), tuple(args),
                callee=callee_tok.text, metadata_text=meta,
                result_type=ret_ty)
            return self._finish(inst, meta_already=bool(meta))
        except _UnmodeledCall:
            self.pos = save
            return None

    _ORDERINGS = frozenset({
        "unordered", "monotonic", "acquire", "release", "acq_rel", "seq_cst",
    })

    def _consume_atomic_ordering(self) -> str:
        """Atomic ordering / syncscope tokens are kept verbatim as a tail."""
        pieces = []
        while True:
            tok = self.peek()
            if tok.kind == "ident" and tok.text == "syncscope":
                start = tok.pos
                self._skip_balanced_after_ident()
                pieces.append(self.source[start:self.peek().pos].strip())
                continue
            if tok.kind == "ident" and tok.text in self._ORDERINGS:
                pieces.append(tok.text)
                self.advance()
                continue
            break
        return " " + " ".join(pieces) if pieces else ""

    def _collect_flags(self, allowed: set) -> tuple:
        flags = []
        while self.peek().kind == "ident" and self.peek().text in allowed:
            if self.at_type_start():
                break
            flags.append(self.advance().text)
        return sort_flags(flags)

    def _finish(self, inst: Instruction, meta_already: bool = False) -> Instruction:
        """Fold trailing ``, align N`` / ``, !md !N`` tails into metadata."""
        pieces = [inst.metadata_text] if meta_already and inst.metadata_text else []
        while self.at_punct(","):
            nxt = self.peek(1)
            if nxt.kind == "ident" and nxt.text == "align":
                self.advance()
                self.advance()
                num = self.advance()
                pieces.append(f", align {num.text}")
                continue
            if nxt.kind == "meta":
                self.advance()
                metas = []
                while self.peek().kind == "meta":
                    metas.append(self.advance().text)
                pieces.append(", " + " ".join(metas))
                continue
            break
        meta = "".join(pieces) if pieces else inst.metadata_text
        if meta != inst.metadata_text:
            inst = dataclasses.replace(inst, metadata_text=meta)
        return inst

    def _parse_opaque(self, start: Token, op_tok: Token, result) -> Instruction:
        """Keep an unsupported instruction verbatim, to end of source line."""
        line = op_tok.line
        operands = []
        result_type = None
        self.advance()  # opcode
        # best-effort result type: first type token after the opcode
        save = self.pos
        try:
            while self.peek().kind == "ident" and not self.at_type_start() \
                    and self.peek().line == line:
                self.advance()
            if self.at_type_start() and self.peek().line == line:
                result_type = self.parse_type()
        except ParseError:
            result_type = None
            self.pos = save
        if op_tok.text == "alloca":
            result_type = PTR
        self.pos = save
        # consume to end of line; open brackets (switch tables, struct
        # constants) and continuation keywords (invoke's "to"/"unwind",
        # landingpad clauses) extend the instruction across lines
        continuations = ("to", "unwind", "catch", "cleanup", "filter")
        depth = 0
        while True:
            tok = self.peek()
            if tok.kind == "eof":
                break
            if depth == 0 and tok.kind == "punct" and tok.text == "}":
                break
            if depth == 0 and tok.line != line:
                if tok.kind == "ident" and tok.text in continuations:
                    line = tok.line
                else:
                    break
            self.advance()
            if tok.kind == "punct":
                if tok.text in ("(", "[", "<", "{"):
                    depth += 1
                elif tok.text in (")", "]", ">", "}"):
                    depth = max(depth - 1, 0)
                    if depth == 0:
                        line = tok.line
            if tok.kind == "local":
                operands.append(ValueRef("local", name=tok.text))
        end = self.peek().pos
        raw = self.source[start.pos:end].rstrip()
        return Instruction(
            op_tok.text, result, (), (), tuple(operands),
            opaque=True, raw_text=raw, result_type=result_type)


def parse_module(text: str, filename: str = "<ir>") -> Module:
    """Parse a textual IR module; raises ParseError on malformed input."""
    return Parser(text, filename).parse_module()


def parse_function_text(text: str, filename: str = "<ir>") -> Function:
    """Parse text expected to contain exactly one function definition."""
    mod = parse_module(text, filename)
    if len(mod.functions) != 1:
        raise ParseError(
            f"expected exactly one function, found {len(mod.functions)}",
            1, 1, filename=filename)
    return mod.functions[0]
