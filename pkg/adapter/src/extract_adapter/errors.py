"""Adapter error hierarchy."""


class ExtractError(Exception):
    """Base class for extraction failures."""


class ModelLoadFailure(ExtractError):
    """The requested model or tokenizer could not be loaded."""


class TokenizationFailure(ExtractError):
    """A description could not be tokenized (e.g. empty text)."""


class StructureParseFailure(ExtractError):
    """A structure feature file is unreadable or has the wrong shape."""


class ManifestError(ExtractError):
    """The input manifest is missing or malformed."""
