"""Deterministic synthetic fixtures: two correlated embedding sets.

Shared latent z_i ~ N(0, I); graph_i = A z_i + sigma * eps, text_i = B z_i +
sigma * eps' with fixed random full-rank maps A and B drawn first from the
same seeded generator. identity=True (requires all dims equal) replaces A
and B with identity so sigma=0 yields two identical files.
"""

from __future__ import annotations

import numpy as np

from .embedding_store import EmbeddingSet
from .errors import BadDims


def gen_synthetic(
    n: int,
    latent_dim: int,
    g_dim: int,
    t_dim: int,
    noise: float,
    seed: int,
    identity: bool = False,
) -> tuple[EmbeddingSet, EmbeddingSet]:
    if n < 1:
        raise BadDims("need at least one sample")
    if latent_dim < 2 or g_dim < 2 or t_dim < 2:
        raise BadDims("all dimensions must be >= 2")
    if identity and not (latent_dim == g_dim == t_dim):
        raise BadDims("identity maps require latent_dim == g_dim == t_dim")

    rng = np.random.default_rng(seed)
    if identity:
        a = np.eye(g_dim, latent_dim)
        b = np.eye(t_dim, latent_dim)
    else:
        a = rng.standard_normal((g_dim, latent_dim))
        b = rng.standard_normal((t_dim, latent_dim))
    z = rng.standard_normal((n, latent_dim))
    graph = z @ a.T + noise * rng.standard_normal((n, g_dim))
    text = z @ b.T + noise * rng.standard_normal((n, t_dim))

    ids = [f"SYN{i + 1:06d}" for i in range(n)]
    g_records = {pid: row.astype(np.float32) for pid, row in zip(ids, graph)}
    t_records = {pid: row.astype(np.float32) for pid, row in zip(ids, text)}
    g_set = EmbeddingSet(model_name="synthetic-graph", modality="graph", dim=g_dim, records=g_records)
    t_set = EmbeddingSet(model_name="synthetic-text", modality="text", dim=t_dim, records=t_records)
    return g_set, t_set
