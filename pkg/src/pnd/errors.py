"""Exception hierarchy shared by the parser, the kernel and the oracle.

Every error carries a short class name that reports use verbatim, so the
names below are part of the public surface (JSON reports, mutation files).
"""

from __future__ import annotations


class PNDError(Exception):
    """Base class. ``code`` is an optional finer-grained sub-code."""

    code: str | None = None

    def __init__(self, message: str, code: str | None = None):
        super().__init__(message)
        self.message = message
        if code is not None:
            self.code = code

    @property
    def kind(self) -> str:
        return type(self).__name__


class ParseError(PNDError):
    def __init__(self, message: str, line: int = 1, col: int = 1,
                 expected: frozenset[str] = frozenset()):
        where = f"{line}:{col}: {message}"
        if expected:
            where += f" (expected one of: {', '.join(sorted(expected))})"
        super().__init__(where)
        self.line = line
        self.col = col
        self.expected = expected


class CaptureError(PNDError):
    pass


class UnifyFailure(PNDError):
    pass


class CategoryError(PNDError):
    pass


class AmbiguousCategory(PNDError):
    pass


class UnknownName(PNDError):
    pass


class UnknownRef(PNDError):
    pass


class ScopeError(PNDError):
    pass


class RuleMismatch(PNDError):
    pass


class RuleDisabled(PNDError):
    pass


class UnknownRule(PNDError):
    pass


class DefError(PNDError):
    """Raised by the definition rule; ``code`` names the violated condition:
    existing-symbol, repeated-symbol, unknown-symbol-in-definiens,
    free-var-mismatch, bad-shape or not-main-stroke."""


class ExtractError(PNDError):
    pass


class ReplayError(PNDError):
    pass


class OracleCapExceeded(PNDError):
    def __init__(self, message: str, size: int | None = None):
        super().__init__(message)
        self.size = size
