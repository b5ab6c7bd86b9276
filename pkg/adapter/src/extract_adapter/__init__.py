"""Extract real model embeddings into EMB1 files for the modal-align toolkit."""

from .emb1 import write_emb1
from .errors import (
    ExtractError,
    ManifestError,
    ModelLoadFailure,
    StructureParseFailure,
    TokenizationFailure,
)
from .jobs import KNOWN_DIMS, ExtractionJob, read_manifest
from .structure_extract import extract_structure_embeddings, pool_features
from .text_extract import extract_text_embeddings

__version__ = "0.1.0"
