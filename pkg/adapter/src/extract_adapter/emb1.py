"""EMB1 writer: the wire format shared with the modal-align toolkit.

Layout (little-endian): magic "EMB1", u16 version (1), u32 dim,
u64 record count; per record u16 id_len, UTF-8 id, dim * f32.
A JSON sidecar <path>.json records model_name / modality / dim / count.
"""

from __future__ import annotations

import json
import os
import struct

import numpy as np

MAGIC = b"EMB1"
VERSION = 1
HEADER = struct.Struct("<4sHIQ")


def write_emb1(
    records: dict[str, np.ndarray],
    dim: int,
    path: str | os.PathLike,
    model_name: str,
    modality: str,
) -> None:
    for pid, vec in records.items():
        if vec.shape != (dim,):
            raise ValueError(f"record {pid!r} has shape {vec.shape}, expected ({dim},)")
        if not np.all(np.isfinite(vec)):
            raise ValueError(f"record {pid!r} contains NaN or infinity")
    with open(path, "wb") as fh:
        fh.write(HEADER.pack(MAGIC, VERSION, dim, len(records)))
        for pid, vec in records.items():
            raw = pid.encode("utf-8")
            fh.write(struct.pack("<H", len(raw)))
            fh.write(raw)
            fh.write(np.asarray(vec, dtype="<f4").tobytes())
    manifest = {
        "model_name": model_name,
        "modality": modality,
        "dim": dim,
        "count": len(records),
        "source": os.path.basename(os.fspath(path)),
    }
    with open(os.fspath(path) + ".json", "w") as fh:
        json.dump(manifest, fh, indent=2)
        fh.write("\n")
