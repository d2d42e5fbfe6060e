"""Exception hierarchy. Every error carries a stable machine-readable ``code``."""

from __future__ import annotations


class PmloError(Exception):
    code = "ERROR"

    def __init__(self, message: str, *, code: str | None = None, line: int | None = None,
                 column: int | None = None, source: str | None = None):
        if code is not None:
            self.code = code
        self.line = line
        self.column = column
        self.source = source
        super().__init__(message)

    def __str__(self) -> str:
        where = []
        if self.source:
            where.append(str(self.source))
        if self.line is not None:
            where.append(f"line {self.line}")
        if self.column is not None:
            where.append(f"col {self.column}")
        prefix = ":".join(where)
        msg = f"{self.code}: {self.args[0]}"
        return f"{prefix}: {msg}" if prefix else msg


class FormulaSyntaxError(PmloError):
    code = "SYNTAX"


class ScopeError(PmloError):
    code = "SCOPE"


class LDiffUndecidable(PmloError):
    """Cross-step clock comparisons make model checking undecidable."""
    code = "L_DIFF_UNDECIDABLE"


class UnsupportedFormula(PmloError):
    code = "UNSUPPORTED"


class ModelError(PmloError):
    code = "MODEL"


class AutomatonError(PmloError):
    code = "AUTOMATON"


class StateBlowup(PmloError):
    code = "STATE_BLOWUP"

    def __init__(self, message: str, *, explored: int = 0, frontier: int = 0, **kw):
        self.explored = explored
        self.frontier = frontier
        super().__init__(message, **kw)
