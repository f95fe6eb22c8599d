"""Exception hierarchy.

Everything raised on purpose derives from :class:`BiaslensError`, so the
CLI can map domain failures to exit code 2 and leave genuine I/O errors
(``OSError``) to exit code 1.
"""


class BiaslensError(Exception):
    """Base class for all toolkit errors."""


# ---------------------------------------------------------------- corpus

class FormatError(BiaslensError):
    """Malformed embedding file; carries the byte offset where parsing failed."""

    def __init__(self, message: str, offset: int | None = None):
        if offset is not None:
            message = f"{message} (byte offset {offset})"
        super().__init__(message)
        self.offset = offset


class BadMagic(FormatError):
    pass


class VersionUnsupported(FormatError):
    pass


class TruncatedPayload(FormatError):
    pass


class DuplicateId(BiaslensError):
    pass


class NonFiniteValue(BiaslensError):
    pass


class DuplicateMetaId(BiaslensError):
    pass


class UnknownTierName(BiaslensError):
    pass


class NegativePercentage(BiaslensError):
    pass


# ------------------------------------------------------------- retrieval

class DimMismatch(BiaslensError):
    pass


class ZeroVectorWithCosine(BiaslensError):
    pass


class MultiVectorUnsupported(BiaslensError):
    pass


class EmptyCandidateSet(BiaslensError):
    pass


# ---------------------------------------------------------------- metrics

class MissingLanguageMeta(BiaslensError):
    pass


class UnsmoothedZero(BiaslensError):
    pass


class MissingRelevance(BiaslensError):
    pass


class UnknownLanguage(BiaslensError):
    pass


# --------------------------------------------------------------- triplets

class EmptyOutcomeSet(BiaslensError):
    pass


class UnresolvedId(BiaslensError):
    pass


# ------------------------------------------------------------------ synth

class CountMismatch(BiaslensError):
    pass


class DegenerateSpec(BiaslensError):
    pass


# -------------------------------------------------------------- analytics

class SingleLabelOnly(BiaslensError):
    pass


class LengthMismatch(BiaslensError):
    pass


class ZeroVariance(BiaslensError):
    pass
