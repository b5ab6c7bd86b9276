"""Extraction job description and manifest loading."""

from __future__ import annotations

import json
from dataclasses import dataclass

from .errors import ManifestError

# Published embedding sizes for the supported upstream models. Model
# identifiers outside this table are accepted; their dim is taken from
# the loaded model itself.
KNOWN_DIMS = {
    "gat": 64,
    "scannet": 128,
    "gvp": 148,
    "gearnet": 3072,
    "gemma2-2b": 2304,
    "llama3.1-8b": 4096,
    "llama3.1-70b": 8192,
}


@dataclass(frozen=True)
class ExtractionJob:
    model: str
    modality: str  # "text" or "graph"
    manifest_path: str
    out_path: str

    def __post_init__(self):
        if self.modality not in ("text", "graph"):
            raise ManifestError(f"modality must be 'text' or 'graph', got {self.modality!r}")

    @property
    def declared_dim(self) -> int | None:
        return KNOWN_DIMS.get(self.model.lower())


def read_manifest(path: str) -> list[dict]:
    """JSONL rows with an 'id' plus 'text' (text modality) or 'path' (graph)."""
    rows = []
    seen = set()
    try:
        with open(path) as fh:
            for lineno, line in enumerate(fh, start=1):
                line = line.strip()
                if not line:
                    continue
                try:
                    obj = json.loads(line)
                except json.JSONDecodeError as exc:
                    raise ManifestError(f"{path}:{lineno}: invalid JSON") from exc
                if "id" not in obj:
                    raise ManifestError(f"{path}:{lineno}: missing 'id'")
                if obj["id"] in seen:
                    raise ManifestError(f"{path}:{lineno}: duplicate id {obj['id']!r}")
                seen.add(obj["id"])
                rows.append(obj)
    except FileNotFoundError as exc:
        raise ManifestError(f"manifest not found: {path}") from exc
    if not rows:
        raise ManifestError(f"manifest has no rows: {path}")
    return rows
