"""Exception taxonomy shared across the package."""

from __future__ import annotations


class PeepseekError(Exception):
    """Base class for all package errors."""


class ParseError(PeepseekError):
    """Token-level violation in textual IR.

    Carries a position and renders an opt-style diagnostic with the
    offending source line and a caret.
    """

    def __init__(self, message: str, line: int, column: int,
                 source_line: str = "", filename: str = "<ir>"):
        self.message = message
        self.line = line
        self.column = column
        self.source_line = source_line
        self.filename = filename
        super().__init__(self.diagnostic())

    def diagnostic(self) -> str:
        head = f"{self.filename}:{self.line}:{self.column}: error: {self.message}"
        if not self.source_line:
            return head
        caret = " " * max(self.column - 1, 0) + "^"
        return f"{head}\n{self.source_line}\n{caret}"


class WrapError(PeepseekError):
    """A sequence cannot be wrapped as a standalone function."""

    def __init__(self, reason: str, detail: str = ""):
        self.reason = reason
        self.detail = detail
        super().__init__(f"{reason}: {detail}" if detail else reason)


class ExtractError(PeepseekError):
    """Extraction aborted because a required external tool is unusable."""

    def __init__(self, tool: str, detail: str = ""):
        self.tool = tool
        self.detail = detail
        super().__init__(f"{tool}: {detail}" if detail else tool)


class AgentError(PeepseekError):
    """Completion backend failure; ``kind`` is one of
    timeout | transport | exhausted-transcript | rate-limited."""

    def __init__(self, kind: str, detail: str = ""):
        self.kind = kind
        self.detail = detail
        super().__init__(f"{kind}: {detail}" if detail else kind)


class ExtractionError(PeepseekError):
    """No usable IR could be pulled out of an agent response."""

    def __init__(self, kind: str = "no-ir-found"):
        self.kind = kind
        super().__init__(kind)


class ToolError(PeepseekError):
    """Subprocess adapter failure distinct from tool-reported diagnostics;
    ``kind`` is one of spawn | timeout | lowering-failed | parse-failed."""

    def __init__(self, kind: str, detail: str = ""):
        self.kind = kind
        self.detail = detail
        super().__init__(f"{kind}: {detail}" if detail else kind)


class StorageError(PeepseekError):
    """Findings or digest persistence failure; ``kind`` is one of
    io | corrupt-header | truncated."""

    def __init__(self, kind: str, detail: str = ""):
        self.kind = kind
        self.detail = detail
        super().__init__(f"{kind}: {detail}" if detail else kind)


class UnsupportedOpcode(PeepseekError):
    """The reference interpreter cannot evaluate this construct."""

    def __init__(self, what: str):
        self.what = what
        super().__init__(what)
