"""Tokenizer for textual LLVM IR.

Produces position-annotated tokens so the parser can emit opt-style
diagnostics and recover verbatim source slices for opaque constructs.
"""

from __future__ import annotations

from dataclasses import dataclass

from ..errors import ParseError

_NAME_START = set("abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ$._-")
_NAME_CONT = _NAME_START | set("0123456789")
_PUNCT = set("(){}[]<>,=*:")


@dataclass(frozen=True)
class Token:
    kind: str      # ident | local | global | meta | attrgroup | int | float | string | punct | eof
    text: str
    line: int
    column: int
    pos: int       # offset of token start in the source string

    def __repr__(self):
        return f"Token({self.kind}, {self.text!r}, {self.line}:{self.column})"


class Lexer:
    def __init__(self, source: str, filename: str = "<ir>"):
        self.source = source
        self.filename = filename
        self.lines = source.splitlines()
        self.i = 0
        self.line = 1
        self.col = 1

    def error(self, message: str, line: int, column: int) -> ParseError:
        src = self.lines[line - 1] if 0 < line <= len(self.lines) else ""
        return ParseError(message, line, column, src, self.filename)

    def _advance(self, count: int = 1):
        for _ in range(count):
            if self.source[self.i] == "\n":
                self.line += 1
                self.col = 1
            else:
                self.col += 1
            self.i += 1

    def _peek(self, ahead: int = 0) -> str:
        j = self.i + ahead
        return self.source[j] if j < len(self.source) else ""

    def _lex_name(self) -> str | None:
        if self._peek() == '"':
            self._advance()
            buf = []
            while self.i < len(self.source) and self._peek() != '"':
                buf.append(self._peek())
                self._advance()
            if self.i >= len(self.source):
                return None
            self._advance()
            return "".join(buf)
        buf = []
        while self.i < len(self.source) and self._peek() in _NAME_CONT:
            buf.append(self._peek())
            self._advance()
        return "".join(buf) if buf else None

    def _lex_number(self) -> tuple[str, str]:
        buf = []
        if self._peek() == "-":
            buf.append("-")
            self._advance()
        if self._peek() == "0" and self._peek(1) in "xX":
            # hexadecimal payload: LLVM uses this spelling for float bit
            # patterns (possibly with a K/M/H/etc. marker letter)
            buf.append(self._peek())
            self._advance()
            buf.append(self._peek())
            self._advance()
            while self._peek() in "0123456789abcdefABCDEFKLMHR":
                buf.append(self._peek())
                self._advance()
            return "".join(buf), "float"
        while self._peek().isdigit():
            buf.append(self._peek())
            self._advance()
        kind = "int"
        if self._peek() == "." and self._peek(1).isdigit():
            kind = "float"
            buf.append(".")
            self._advance()
            while self._peek().isdigit():
                buf.append(self._peek())
                self._advance()
        if self._peek() in "eE" and (self._peek(1).isdigit() or
                                     (self._peek(1) in "+-" and self._peek(2).isdigit())):
            kind = "float"
            buf.append(self._peek())
            self._advance()
            if self._peek() in "+-":
                buf.append(self._peek())
                self._advance()
            while self._peek().isdigit():
                buf.append(self._peek())
                self._advance()
        return "".join(buf), kind

    def tokens(self) -> list[Token]:
        src = self.source
        n = len(src)
        out: list[Token] = []
        while self.i < n:
            ch = src[self.i]
            if ch in " \t\r\n":
                self._advance()
                continue
            if ch == ";":
                while self.i < n and src[self.i] != "\n":
                    self._advance()
                continue
            start_line, start_col, start_pos = self.line, self.col, self.i
            if ch in "%@":
                kind = "local" if ch == "%" else "global"
                self._advance()
                name = self._lex_name()
                if name is None:
                    raise self.error("expected name after sigil", start_line, start_col)
                out.append(Token(kind, name, start_line, start_col, start_pos))
                continue
            if ch == "!":
                self._advance()
                if self._peek() in _NAME_CONT:
                    name = self._lex_name() or ""
                else:
                    name = ""
                out.append(Token("meta", "!" + name, start_line, start_col, start_pos))
                continue
            if ch == "#":
                self._advance()
                name = self._lex_name() or ""
                out.append(Token("attrgroup", "#" + name, start_line, start_col, start_pos))
                continue
            if ch == '"':
                self._advance()
                buf = []
                while self.i < n and src[self.i] != '"':
                    buf.append(src[self.i])
                    self._advance()
                if self.i >= n:
                    raise self.error("unterminated string", start_line, start_col)
                self._advance()
                out.append(Token("string", "".join(buf), start_line, start_col, start_pos))
                continue
            if ch.isdigit() or (ch == "-" and self._peek(1).isdigit()):
                text, kind = self._lex_number()
                out.append(Token(kind, text, start_line, start_col, start_pos))
                continue
            if ch == "." and src[self.i:self.i + 3] == "...":
                self._advance(3)
                out.append(Token("punct", "...", start_line, start_col, start_pos))
                continue
            if ch in _NAME_START:
                name = self._lex_name()
                out.append(Token("ident", name, start_line, start_col, start_pos))
                continue
            if ch in _PUNCT:
                self._advance()
                out.append(Token("punct", ch, start_line, start_col, start_pos))
                continue
            raise self.error(f"unexpected character {ch!r}", start_line, start_col)
        out.append(Token("eof", "", self.line, self.col, n))
        return out


def tokenize(source: str, filename: str = "<ir>") -> list[Token]:
    return Lexer(source, filename).tokens()
