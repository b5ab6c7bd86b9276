"""Structure-side extraction: pool upstream per-node features to one vector.

The upstream geometric models are treated as black boxes run elsewhere;
this module consumes their saved per-protein feature files (.npy). A
file holding [node_count, dim] (or [1, node_count, dim]) features is
mean-pooled over the node axis; a file already holding a single [dim]
(or [1, dim]) vector is passed through.
"""

from __future__ import annotations

import os

import numpy as np

from .emb1 import write_emb1
from .errors import StructureParseFailure
from .jobs import ExtractionJob, read_manifest


def pool_features(features: np.ndarray) -> np.ndarray:
    arr = np.asarray(features, dtype=np.float64)
    if arr.ndim == 3 and arr.shape[0] == 1:
        arr = arr[0]
    if arr.ndim == 2:
        if arr.shape[0] == 1:
            return arr[0]
        return arr.mean(axis=0)
    if arr.ndim == 1:
        return arr
    raise StructureParseFailure(f"cannot pool features of shape {arr.shape}")


def extract_structure_embeddings(
    job: ExtractionJob,
    structure_dir: str | None = None,
) -> dict:
    """Pool each protein's feature file into one vector and write EMB1.

    Manifest rows carry explicit 'path' entries, or structure_dir is
    scanned for <id>.npy files; files whose ID is not in the manifest
    are skipped and counted.
    """
    rows = read_manifest(job.manifest_path)
    wanted = {row["id"] for row in rows}
    sources: dict[str, str] = {}
    skipped = 0
    if structure_dir is not None:
        for name in sorted(os.listdir(structure_dir)):
            if not name.endswith(".npy"):
                continue
            pid = name[: -len(".npy")]
            if pid not in wanted:
                skipped += 1
                continue
            sources[pid] = os.path.join(structure_dir, name)
    for row in rows:
        if "path" in row:
            sources[row["id"]] = row["path"]
    records: dict[str, np.ndarray] = {}
    dim = None
    for pid in sorted(sources):
        try:
            features = np.load(sources[pid])
        except Exception as exc:
            raise StructureParseFailure(f"{pid!r}: {exc}") from exc
        vec = pool_features(features)
        if dim is None:
            dim = int(vec.shape[0])
        elif vec.shape != (dim,):
            raise StructureParseFailure(
                f"{pid!r} pooled to shape {vec.shape}, expected ({dim},)"
            )
        records[pid] = vec.astype(np.float32)
    if not records:
        raise StructureParseFailure("no structure features matched the manifest")
    declared = job.declared_dim
    if declared is not None and declared != dim:
        raise StructureParseFailure(
            f"model {job.model!r} emits dim {dim}, expected {declared}"
        )
    write_emb1(records, dim, job.out_path, model_name=job.model, modality="graph")
    return {"count": len(records), "dim": dim, "skipped": skipped}
