"""Exception taxonomy shared across the package.

Every error carries enough context to be rendered as a machine-readable
JSON object by the CLI (kind + message + details dict).
"""

from __future__ import annotations


class RsrError(Exception):
    """Base class for all package errors."""

    kind = "RsrError"

    def __init__(self, message: str, **details):
        super().__init__(message)
        self.details = details

    def to_json(self) -> dict:
        return {"error": self.kind, "message": str(self), **self.details}


class DimensionMismatch(RsrError):
    kind = "DimensionMismatch"


class OutOfAlphabet(RsrError):
    """An entry is outside the bitwidth's alphabet ({0,1} or {-1,0,+1})."""

    kind = "OutOfAlphabet"

    def __init__(self, row: int, col: int, value):
        super().__init__(
            f"entry {value!r} at ({row}, {col}) is outside the alphabet",
            row=row, col=col, value=int(value),
        )


class NonFinite(RsrError):
    kind = "NonFinite"


class KTooLarge(RsrError):
    """Block height exceeds the cap (16 binary, 10 ternary)."""

    kind = "KTooLarge"

    def __init__(self, k: int, bitwidth: str):
        cap = 10 if bitwidth == "ternary" else 16
        super().__init__(
            f"k={k} exceeds the {bitwidth} cap of {cap}", k=k, bitwidth=bitwidth,
        )


class TileTooWide(RsrError):
    kind = "TileTooWide"


class CorruptArtifact(RsrError):
    kind = "CorruptArtifact"


class HeterogeneousSiblings(RsrError):
    """Batched matrices disagree on column count or bitwidth."""

    kind = "HeterogeneousSiblings"


class BadTokenId(RsrError):
    kind = "BadTokenId"


class InvalidDepth(RsrError):
    kind = "InvalidDepth"
