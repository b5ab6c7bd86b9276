"""Exception hierarchy shared by every module.

All errors raised for bad user input or malformed files derive from
ValidationError; internal consistency failures derive from InternalError.
The CLI maps the two branches onto exit codes 1 and 2.
"""


class ModalAlignError(Exception):
    """Base class for all toolkit errors."""

    code = "ModalAlignError"


class ValidationError(ModalAlignError):
    code = "ValidationError"


class InternalError(ModalAlignError):
    code = "InternalError"


# --- embedding files / datasets ---

class BadMagic(ValidationError):
    code = "BadMagic"


class VersionUnsupported(ValidationError):
    code = "VersionUnsupported"


class DimMismatch(ValidationError):
    code = "DimMismatch"


class DuplicateId(ValidationError):
    code = "DuplicateId"


class NonFiniteValue(ValidationError):
    code = "NonFiniteValue"


class TruncatedFile(ValidationError):
    code = "TruncatedFile"


class IoFailure(ValidationError):
    code = "IoFailure"


class EmptyIntersection(ValidationError):
    code = "EmptyIntersection"


class WrongModality(ValidationError):
    code = "WrongModality"


class TooFewIds(ValidationError):
    code = "TooFewIds"


# --- FASTA / metadata ---

class NoRecords(ValidationError):
    code = "NoRecords"


class MalformedHeader(ValidationError):
    code = "MalformedHeader"


class EmptyInput(ValidationError):
    code = "EmptyInput"


# --- projection heads / training ---

class DegenerateOutput(InternalError):
    code = "DegenerateOutput"


class ShapeMismatch(ValidationError):
    code = "ShapeMismatch"


class EmptyBatch(ValidationError):
    code = "EmptyBatch"


class ConfigMismatch(ValidationError):
    code = "ConfigMismatch"


# --- metrics ---

class TooFewProteins(ValidationError):
    code = "TooFewProteins"


class LengthMismatch(ValidationError):
    code = "LengthMismatch"


class ZeroVariance(ValidationError):
    code = "ZeroVariance"


class IdSetMismatch(ValidationError):
    code = "IdSetMismatch"


# --- retrieval ---

class EmptyIndex(ValidationError):
    code = "EmptyIndex"


class MissingDescription(ValidationError):
    code = "MissingDescription"


# --- synthetic data ---

class BadDims(ValidationError):
    code = "BadDims"
