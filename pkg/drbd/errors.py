"""
Exception hierarchy for the DRBD engine.

Every error carries the process exit code the CLI reports for it:
- 2: parse, semantic and model/structure errors
- 3: numeric errors (quadrature, rewrite budget)
"""
from typing import Any, Optional


class DrbdError(Exception):
    """Base class for all engine errors"""
    exit_code = 2
    kind = "error"

    def __init__(self, message: str, hint: str = ""):
        super().__init__(message)
        self.message = message
        self.hint = hint

    def to_dict(self) -> dict:
        out = {"ok": False, "error": self.message, "kind": self.kind}
        if self.hint:
            out["hint"] = self.hint
        return out

    def __str__(self) -> str:
        if self.hint:
            return f"{self.message} ({self.hint})"
        return self.message


class ModelError(DrbdError):
    """Unbound block-id, spare misuse, invalid model."""
    kind = "model"


class IndependenceError(ModelError):
    kind = "independence"

    def __init__(self, block: str):
        super().__init__(
            f"block '{block}' occurs more than once; the compositional formulas need a read-once expression",
            hint="use simulate for non-read-once models",
        )
        self.block = block


class UnsupportedCompositionError(ModelError):
    kind = "unsupported"

    def __init__(self, message: str):
        super().__init__(message, hint="use simulate for this model")


class StructureError(DrbdError):
    """Empty index sets, overlapping families, bad depth."""
    kind = "structure"


class DomainError(DrbdError):
    """Argument outside the operation's domain (t < 0, rate <= 0, ...)."""
    kind = "domain"


class PreconditionError(DrbdError):
    kind = "precondition"


class SamplingError(DrbdError):
    kind = "sampling"

    def __init__(self, block: str, message: str):
        super().__init__(f"sampler for block '{block}' {message}")
        self.block = block


class ParseError(DrbdError):
    kind = "parse"

    def __init__(self, message: str, line: int, column: int):
        super().__init__(f"{line}:{column}: {message}")
        self.line = line
        self.column = column


class SemanticError(DrbdError):
    kind = "semantic"

    def __init__(self, message: str, line: int, column: int, end_column: Optional[int] = None):
        super().__init__(f"{line}:{column}: {message}")
        self.line = line
        self.column = column
        self.end_column = end_column if end_column is not None else column


class NumericError(DrbdError):
    exit_code = 3
    kind = "numeric"

    def __init__(self, message: str, estimate: float = float("nan")):
        super().__init__(message)
        self.estimate = estimate


class NonConvergenceError(DrbdError):
    exit_code = 3
    kind = "nonconvergence"

    def __init__(self, message: str, partial: Any):
        super().__init__(message, hint="drop --expand or raise the step budget")
        self.partial = partial
