"""Exact top-k cosine retrieval over projected training proteins."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .embedding_store import PairedDataset
from .errors import EmptyIndex, MissingDescription, ShapeMismatch
from .projection_head import ProjectionHead, forward, forward_batch


@dataclass
class RetrievalIndex:
    ids: list[str]
    vectors: np.ndarray  # (n, dim) unit rows, sorted-ID order

    @property
    def dim(self) -> int:
        return self.vectors.shape[1]

    def __len__(self) -> int:
        return len(self.ids)


@dataclass
class RetrievalResult:
    query_id: str
    neighbors: list[tuple[str, float]]
    augmented_text: str = ""


def build_index(
    train_ids: list[str],
    g_head: ProjectionHead,
    paired: PairedDataset,
) -> RetrievalIndex:
    """Project the training proteins' structure embeddings, sorted by ID."""
    if not train_ids:
        raise EmptyIndex("no training proteins to index")
    ordered = sorted(train_ids)
    xg = np.stack([paired.graph.records[i] for i in ordered]).astype(np.float64)
    vectors, _ = forward_batch(g_head, xg)
    return RetrievalIndex(ids=ordered, vectors=vectors)


def query_topk(
    index: RetrievalIndex,
    query: np.ndarray,
    k: int,
    query_id: str = "",
) -> RetrievalResult:
    """Exact top-k neighbors by cosine; ties break by ascending protein ID."""
    if len(index) == 0:
        raise EmptyIndex("empty retrieval index")
    if k < 1:
        raise ShapeMismatch("k must be >= 1")
    query = np.asarray(query, dtype=np.float64)
    if query.shape != (index.dim,):
        raise ShapeMismatch(f"query shape {query.shape} != index dim ({index.dim},)")
    scored = [
        (float(np.dot(index.vectors[i], query)), pid) for i, pid in enumerate(index.ids)
    ]
    scored.sort(key=lambda sc: (-sc[0], sc[1]))
    top = scored[: min(k, len(scored))]
    return RetrievalResult(query_id=query_id, neighbors=[(pid, cos) for cos, pid in top])


def query_topk_by_id(
    index: RetrievalIndex,
    paired: PairedDataset,
    g_head: ProjectionHead,
    query_id: str,
    k: int,
) -> RetrievalResult:
    """Project a protein's structure embedding and retrieve its neighbors."""
    vec = forward(g_head, paired.graph.records[query_id].astype(np.float64))
    return query_topk(index, vec, k, query_id=query_id)


def augment_input(
    result: RetrievalResult,
    descriptions: dict[str, str],
    original_input: str,
) -> str:
    """Prepend neighbor descriptions (rank order, one per line) to the input."""
    if not result.neighbors:
        return original_input
    lines = []
    for pid, _ in result.neighbors:
        if pid not in descriptions:
            raise MissingDescription(f"no description for retrieved protein {pid!r}")
        lines.append(descriptions[pid])
    return "\n".join(lines) + "\n\n" + original_input
