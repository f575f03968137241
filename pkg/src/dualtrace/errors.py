"""Exception hierarchy shared by every pipeline stage."""

from __future__ import annotations


class DualTraceError(Exception):
    """Base class for all errors raised by this package."""

    exit_code = 1


class ParseError(DualTraceError):
    """A log record could not be decoded."""

    exit_code = 3

    def __init__(self, message: str, *, line: int | None = None, source: str | None = None):
        self.line = line
        self.source = source
        self.detail = message
        super().__init__(self._format())

    def _format(self) -> str:
        where = []
        if self.source:
            where.append(str(self.source))
        if self.line is not None:
            where.append(f"line {self.line}")
        prefix = ":".join(where)
        return f"{prefix}: {self.detail}" if prefix else self.detail

    def with_source(self, source: str) -> "ParseError":
        self.source = source
        self.args = (self._format(),)
        return self


class SchemaError(ParseError):
    """A record decoded but violates the field constraints of its schema."""


class IntegrityError(DualTraceError):
    """A log is well formed record by record but inconsistent as a stream."""

    exit_code = 4


class ReconstructionError(IntegrityError):
    """A snapshot cannot be applied to the document state that precedes it."""


class HybridizationError(DualTraceError):
    exit_code = 5


class AnalysisError(DualTraceError):
    exit_code = 6


class SegmentationError(AnalysisError):
    pass


class PropagationError(AnalysisError):
    pass


class TreeError(AnalysisError):
    pass


class ScriptError(DualTraceError):
    """A simulator script asks for an action the document cannot perform."""

    exit_code = 7
