"""Alignment scores, correlations, and protein-perspective statistics.

The model-pair score is the mean positive cosine minus the mean absolute
cosine over all N(N-1) ordered negative pairs. Accumulation runs in
sorted-ID order with plain float64 adds so results are reproducible and
bit-identical to a naive double loop.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .embedding_store import PairedDataset
from .errors import IdSetMismatch, LengthMismatch, TooFewProteins, ZeroVariance
from .projection_head import ProjectionHead, forward_batch


@dataclass
class AlignmentReport:
    positive_score: float
    negative_score: float
    alignment: float
    n: int

    @property
    def negative_pair_count(self) -> int:
        return self.n * (self.n - 1)


@dataclass
class RegressionFit:
    slope: float
    intercept: float
    pearson_r: float | None
    n: int


def _project_pairs(
    ids: list[str],
    g_head: ProjectionHead,
    t_head: ProjectionHead,
    paired: PairedDataset,
) -> tuple[list[str], np.ndarray, np.ndarray]:
    ordered = sorted(ids)
    xg = np.stack([paired.graph.records[i] for i in ordered]).astype(np.float64)
    xt = np.stack([paired.text.records[i] for i in ordered]).astype(np.float64)
    g_proj, _ = forward_batch(g_head, xg)
    t_proj, _ = forward_batch(t_head, xt)
    return ordered, g_proj, t_proj


def model_pair_score(
    test_ids: list[str],
    g_head: ProjectionHead,
    t_head: ProjectionHead,
    paired: PairedDataset,
) -> AlignmentReport:
    """Positive minus negative score over the given IDs."""
    if len(test_ids) < 2:
        raise TooFewProteins(f"need at least 2 proteins, got {len(test_ids)}")
    _, g_proj, t_proj = _project_pairs(test_ids, g_head, t_head, paired)
    n = len(test_ids)
    pos = 0.0
    for i in range(n):
        pos += float(np.dot(g_proj[i], t_proj[i]))
    neg = 0.0
    for i in range(n):
        for j in range(n):
            if j != i:
                neg += abs(float(np.dot(g_proj[i], t_proj[j])))
    f_pos = pos / n
    f_neg = neg / (n * (n - 1))
    return AlignmentReport(
        positive_score=f_pos, negative_score=f_neg, alignment=f_pos - f_neg, n=n
    )


def per_protein_scores(
    test_ids: list[str],
    g_head: ProjectionHead,
    t_head: ProjectionHead,
    paired: PairedDataset,
) -> list[tuple[str, float]]:
    """Positive-pair cosine per protein, in sorted-ID order."""
    ordered, g_proj, t_proj = _project_pairs(test_ids, g_head, t_head, paired)
    return [(pid, float(np.dot(g_proj[i], t_proj[i]))) for i, pid in enumerate(ordered)]


def pearson(x, y) -> float:
    """Pearson correlation coefficient, clamped into [-1, 1]."""
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.shape != y.shape or x.ndim != 1:
        raise LengthMismatch(f"shapes {x.shape} vs {y.shape}")
    if len(x) < 2:
        raise LengthMismatch("need at least 2 points")
    dx = x - x.mean()
    dy = y - y.mean()
    sxx = float(np.dot(dx, dx))
    syy = float(np.dot(dy, dy))
    if sxx == 0.0 or syy == 0.0:
        raise ZeroVariance("constant input has no defined correlation")
    r = float(np.dot(dx, dy)) / np.sqrt(sxx * syy)
    return max(-1.0, min(1.0, r))


def correlation_matrix(
    score_lists: dict[str, list[tuple[str, float]]],
) -> tuple[list[str], np.ndarray]:
    """Pairwise Pearson matrix over ID-aligned per-protein score lists."""
    labels = list(score_lists.keys())
    id_sets = [tuple(sorted(pid for pid, _ in score_lists[lab])) for lab in labels]
    if len(set(id_sets)) > 1:
        raise IdSetMismatch("all score lists must cover the same protein IDs")
    vectors = []
    for lab in labels:
        by_id = dict(score_lists[lab])
        vectors.append(np.array([by_id[pid] for pid in id_sets[0]]))
    k = len(labels)
    mat = np.eye(k)
    for a in range(k):
        for b in range(a + 1, k):
            r = pearson(vectors[a], vectors[b])
            mat[a, b] = mat[b, a] = r
    return labels, mat


def ols_fit(x, y) -> RegressionFit:
    """Simple least-squares line with its correlation coefficient.

    Constant y yields slope 0 with pearson_r None (undefined); constant x
    raises ZeroVariance.
    """
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.shape != y.shape or x.ndim != 1:
        raise LengthMismatch(f"shapes {x.shape} vs {y.shape}")
    if len(x) < 2:
        raise LengthMismatch("need at least 2 points")
    dx = x - x.mean()
    dy = y - y.mean()
    sxx = float(np.dot(dx, dx))
    if sxx == 0.0:
        raise ZeroVariance("constant x cannot be regressed on")
    sxy = float(np.dot(dx, dy))
    syy = float(np.dot(dy, dy))
    slope = sxy / sxx
    intercept = float(y.mean()) - slope * float(x.mean())
    if syy == 0.0:
        return RegressionFit(slope=slope, intercept=intercept, pearson_r=None, n=len(x))
    r = max(-1.0, min(1.0, sxy / np.sqrt(sxx * syy)))
    return RegressionFit(slope=slope, intercept=intercept, pearson_r=r, n=len(x))


def _tukey_quartiles(values: np.ndarray) -> tuple[float, float, float]:
    """(q1, median, q3) by the midpoint-hinge convention."""
    s = np.sort(values)
    n = len(s)

    def med(a: np.ndarray) -> float:
        m = len(a)
        mid = m // 2
        if m % 2:
            return float(a[mid])
        return float(a[mid - 1] + a[mid]) / 2.0

    half = n // 2
    lower = s[: half + (n % 2)]  # odd n includes the median in both halves
    upper = s[n - half - (n % 2) :]
    return med(lower), med(s), med(upper)


def group_summary(
    scores: list[tuple[str, float]],
    group_of,
    groups=("single", "multiple"),
) -> dict[str, dict]:
    """Per-group descriptive statistics of per-protein scores.

    group_of maps a protein ID to its group name. Groups named up front but
    receiving no scores report n=0 with no other fields.
    """
    buckets: dict[str, list[float]] = {name: [] for name in groups}
    for pid, score in scores:
        buckets.setdefault(group_of(pid), []).append(score)
    out: dict[str, dict] = {}
    for name in sorted(buckets):
        vals = np.array(buckets[name])
        if len(vals) == 0:
            out[name] = {"n": 0}
            continue
        q1, median, q3 = _tukey_quartiles(vals)
        out[name] = {
            "n": int(len(vals)),
            "mean": float(vals.mean()),
            "median": median,
            "q1": q1,
            "q3": q3,
            "min": float(vals.min()),
            "max": float(vals.max()),
        }
    return out
