"""Per-protein embedding sets: EMB1 file I/O, pairing, and reproducible splits.

EMB1 layout (little-endian):
    bytes 0-3   magic "EMB1"
    u16         version (= 1)
    u32         dim
    u64         record count
    per record: u16 id_len, id_len bytes of UTF-8 id, dim * f32

A companion manifest ``<path>.json`` carries model_name / modality / dim /
count / source so a file is self-describing without reopening the binary.
"""

from __future__ import annotations

import json
import os
import struct
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    BadMagic,
    DimMismatch,
    DuplicateId,
    EmptyIntersection,
    IoFailure,
    NonFiniteValue,
    TooFewIds,
    TruncatedFile,
    VersionUnsupported,
    WrongModality,
)

MAGIC = b"EMB1"
VERSION = 1
HEADER = struct.Struct("<4sHIQ")  # magic, version, dim, count

MODALITIES = ("graph", "text")


@dataclass
class EmbeddingSet:
    """One model's fixed-dimension embeddings keyed by protein ID.

    ``records`` preserves insertion order; vectors are float32.
    """

    model_name: str
    modality: str
    dim: int
    records: dict[str, np.ndarray] = field(default_factory=dict)

    def __post_init__(self):
        self.validate()

    def validate(self):
        if self.modality not in MODALITIES:
            raise WrongModality(f"modality must be one of {MODALITIES}, got {self.modality!r}")
        if self.dim <= 0:
            raise DimMismatch(f"dim must be positive, got {self.dim}")
        for pid, vec in self.records.items():
            if not pid:
                raise DuplicateId("empty protein ID")
            if vec.shape != (self.dim,):
                raise DimMismatch(
                    f"record {pid!r} has shape {vec.shape}, expected ({self.dim},)"
                )
            if not np.all(np.isfinite(vec)):
                raise NonFiniteValue(f"record {pid!r} contains NaN or infinity")

    @property
    def ids(self) -> list[str]:
        return list(self.records.keys())

    def __len__(self) -> int:
        return len(self.records)


@dataclass
class PairedDataset:
    """Two modality sets joined on their common protein IDs (sorted order)."""

    graph: EmbeddingSet
    text: EmbeddingSet
    ids: list[str] = field(default_factory=list)

    def __post_init__(self):
        if not self.ids:
            self.ids = sorted(set(self.graph.records) & set(self.text.records))


@dataclass
class DatasetSplit:
    train: list[str]
    validation: list[str]
    test: list[str]
    seed: int


def write_embedding_file(emb: EmbeddingSet, path: str | os.PathLike) -> None:
    """Serialize an EmbeddingSet as EMB1 plus its JSON manifest."""
    emb.validate()
    try:
        with open(path, "wb") as fh:
            fh.write(HEADER.pack(MAGIC, VERSION, emb.dim, len(emb.records)))
            for pid, vec in emb.records.items():
                raw = pid.encode("utf-8")
                fh.write(struct.pack("<H", len(raw)))
                fh.write(raw)
                fh.write(np.asarray(vec, dtype="<f4").tobytes())
        manifest = {
            "model_name": emb.model_name,
            "modality": emb.modality,
            "dim": emb.dim,
            "count": len(emb.records),
            "source": os.path.basename(os.fspath(path)),
        }
        with open(os.fspath(path) + ".json", "w") as fh:
            json.dump(manifest, fh, indent=2, sort_keys=True)
            fh.write("\n")
    except OSError as exc:
        raise IoFailure(str(exc)) from exc


def read_embedding_file(
    path: str | os.PathLike,
    model_name: str | None = None,
    modality: str | None = None,
) -> EmbeddingSet:
    """Read and validate an EMB1 file.

    model_name / modality default to the companion manifest when present,
    else to "unknown" / "graph". Explicit arguments win.
    """
    manifest_path = os.fspath(path) + ".json"
    if os.path.exists(manifest_path):
        with open(manifest_path) as fh:
            manifest = json.load(fh)
        model_name = model_name or manifest.get("model_name")
        modality = modality or manifest.get("modality")
    model_name = model_name or "unknown"
    modality = modality or "graph"

    with open(path, "rb") as fh:
        head = fh.read(HEADER.size)
        if len(head) < HEADER.size:
            raise TruncatedFile(f"{path}: header truncated")
        magic, version, dim, count = HEADER.unpack(head)
        if magic != MAGIC:
            raise BadMagic(f"{path}: bad magic {magic!r}")
        if version != VERSION:
            raise VersionUnsupported(f"{path}: version {version}")
        records: dict[str, np.ndarray] = {}
        vec_bytes = 4 * dim
        for _ in range(count):
            raw_len = fh.read(2)
            if len(raw_len) < 2:
                raise TruncatedFile(f"{path}: record header truncated")
            (id_len,) = struct.unpack("<H", raw_len)
            raw_id = fh.read(id_len)
            if len(raw_id) < id_len:
                raise TruncatedFile(f"{path}: record id truncated")
            pid = raw_id.decode("utf-8")
            if pid in records:
                raise DuplicateId(f"{path}: duplicate id {pid!r}")
            raw_vec = fh.read(vec_bytes)
            if len(raw_vec) < vec_bytes:
                raise TruncatedFile(f"{path}: vector for {pid!r} truncated")
            records[pid] = np.frombuffer(raw_vec, dtype="<f4").copy()
        trailing = fh.read(1)
        if trailing:
            raise DimMismatch(f"{path}: trailing bytes after {count} records")
    return EmbeddingSet(model_name=model_name, modality=modality, dim=dim, records=records)


def pair_datasets(graph: EmbeddingSet, text: EmbeddingSet) -> PairedDataset:
    """Join two modality sets on their sorted ID intersection."""
    if graph.modality != "graph":
        raise WrongModality(f"first argument must be graph-modality, got {graph.modality!r}")
    if text.modality != "text":
        raise WrongModality(f"second argument must be text-modality, got {text.modality!r}")
    ids = sorted(set(graph.records) & set(text.records))
    if len(ids) < 2:
        raise EmptyIntersection(
            f"only {len(ids)} common protein IDs; need at least 2 for a negative pair"
        )
    return PairedDataset(graph=graph, text=text, ids=ids)


# --- deterministic shuffling -------------------------------------------------

_MASK64 = (1 << 64) - 1


class SplitMix64:
    """SplitMix64 stream; pinned so splits reproduce across implementations."""

    def __init__(self, seed: int):
        self.state = seed & _MASK64

    def next(self) -> int:
        self.state = (self.state + 0x9E3779B97F4A7C15) & _MASK64
        z = self.state
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
        return z ^ (z >> 31)


def fisher_yates(items: list, rng: SplitMix64) -> list:
    """In-place Fisher-Yates using the SplitMix64 stream; returns items."""
    for i in range(len(items) - 1, 0, -1):
        j = rng.next() % (i + 1)
        items[i], items[j] = items[j], items[i]
    return items


def split_dataset(paired: PairedDataset, seed: int) -> DatasetSplit:
    """80/10/remainder split over a seeded permutation of the sorted IDs."""
    ids = sorted(paired.ids)
    n = len(ids)
    if n < 10:
        raise TooFewIds(f"need at least 10 paired proteins to split, got {n}")
    fisher_yates(ids, SplitMix64(seed))
    n_train = (8 * n) // 10  # floor(0.8 N) without float rounding
    n_val = n // 10
    return DatasetSplit(
        train=ids[:n_train],
        validation=ids[n_train : n_train + n_val],
        test=ids[n_train + n_val :],
        seed=seed,
    )
