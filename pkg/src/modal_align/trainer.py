"""Modified InfoNCE training of paired projection heads.

The loss contrasts each in-batch positive pair against the batch's other
text projections, using similarities shifted into [0, 1]:

    s_ij = (cos(g_i, t_j) + 1) / 2
    term_i = -log softmax_j(s_ij / tau)[i]
    loss = (1/B) * sum_i w_i * term_i

w_i is 1 except for designated rare proteins, whose penalty is multiplied
by the reweighting factor (2 by default).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .embedding_store import DatasetSplit, PairedDataset, SplitMix64, fisher_yates
from .errors import ConfigMismatch, DimMismatch, EmptyBatch, ShapeMismatch
from .projection_head import HeadGradients, ProjectionHead, backward_batch, forward_batch


@dataclass(frozen=True)
class ReweightSpec:
    rare_ids: frozenset[str]
    factor: float = 2.0

    def __post_init__(self):
        object.__setattr__(self, "rare_ids", frozenset(self.rare_ids))
        if self.factor < 1.0:
            raise ConfigMismatch("reweight factor must be >= 1")


@dataclass(frozen=True)
class TrainConfig:
    learning_rate: float = 1e-3
    epochs: int = 40
    batch_size: int = 32
    temperature: float = 0.2
    seed: int = 42
    reweight: ReweightSpec | None = None

    def __post_init__(self):
        if self.temperature <= 0:
            raise ConfigMismatch("temperature must be positive")
        if self.batch_size < 1:
            raise ConfigMismatch("batch size must be >= 1")
        if self.epochs < 0:
            raise ConfigMismatch("epochs must be >= 0")


@dataclass
class TrainHistory:
    train_loss: list[float] = field(default_factory=list)
    val_loss: list[float] = field(default_factory=list)
    checkpointed: list[bool] = field(default_factory=list)


def shifted_sim(u: np.ndarray, v: np.ndarray) -> float:
    """Cosine of two unit vectors mapped into [0, 1]."""
    u = np.asarray(u, dtype=np.float64)
    v = np.asarray(v, dtype=np.float64)
    if u.shape != v.shape:
        raise DimMismatch(f"shape {u.shape} vs {v.shape}")
    return (float(np.dot(u, v)) + 1.0) / 2.0


def _sim_matrix(g_proj: np.ndarray, t_proj: np.ndarray) -> np.ndarray:
    return (g_proj @ t_proj.T + 1.0) / 2.0


def _per_sample_terms(sim: np.ndarray, tau: float) -> tuple[np.ndarray, np.ndarray]:
    """(-log softmax diagonal) per row plus the row softmax, via stable LSE."""
    logits = sim / tau
    m = logits.max(axis=1, keepdims=True)
    exp = np.exp(logits - m)
    denom = exp.sum(axis=1, keepdims=True)
    lse = m[:, 0] + np.log(denom[:, 0])
    terms = lse - np.diagonal(logits)
    probs = exp / denom
    return terms, probs


def _check_batch(g_proj: np.ndarray, t_proj: np.ndarray, weights: np.ndarray):
    if g_proj.ndim != 2 or g_proj.shape != t_proj.shape:
        raise ShapeMismatch(
            f"projected batches must share shape, got {g_proj.shape} vs {t_proj.shape}"
        )
    if g_proj.shape[0] == 0:
        raise EmptyBatch("empty batch")
    if weights.shape != (g_proj.shape[0],):
        raise ShapeMismatch("weights length must equal the batch size")


def batch_loss(
    g_proj: np.ndarray,
    t_proj: np.ndarray,
    tau: float,
    weights: np.ndarray | None = None,
) -> tuple[float, np.ndarray]:
    """Weighted mean InfoNCE term over the batch plus the shifted-sim matrix."""
    g_proj = np.asarray(g_proj, dtype=np.float64)
    t_proj = np.asarray(t_proj, dtype=np.float64)
    b = g_proj.shape[0] if g_proj.ndim == 2 else 0
    if weights is None:
        weights = np.ones(b)
    weights = np.asarray(weights, dtype=np.float64)
    _check_batch(g_proj, t_proj, weights)
    sim = _sim_matrix(g_proj, t_proj)
    terms, _ = _per_sample_terms(sim, tau)
    total = 0.0
    for i in range(b):  # fixed-order accumulation
        total += weights[i] * terms[i]
    return total / b, sim


def loss_gradients(
    g_proj: np.ndarray,
    t_proj: np.ndarray,
    tau: float,
    weights: np.ndarray | None = None,
) -> tuple[np.ndarray, np.ndarray]:
    """Exact gradients of the weighted mean loss w.r.t. both projected batches.

    Each sample's own-row gradient scales by exactly its weight; cross terms
    accumulate over rows in index order.
    """
    g_proj = np.asarray(g_proj, dtype=np.float64)
    t_proj = np.asarray(t_proj, dtype=np.float64)
    b = g_proj.shape[0] if g_proj.ndim == 2 else 0
    if weights is None:
        weights = np.ones(b)
    weights = np.asarray(weights, dtype=np.float64)
    _check_batch(g_proj, t_proj, weights)
    sim = _sim_matrix(g_proj, t_proj)
    _, probs = _per_sample_terms(sim, tau)
    # d term_i / d s_ij = (p_ij - delta_ij) / tau ; d s_ij / d g_i = t_j / 2
    coef = (probs - np.eye(b)) / (2.0 * tau * b)
    d_g = (coef @ t_proj) * weights[:, None]
    d_t = (weights[:, None] * coef).T @ g_proj
    return d_g, d_t


# --- Adam ---------------------------------------------------------------------

ADAM_BETA1 = 0.9
ADAM_BETA2 = 0.999
ADAM_EPS = 1e-8


class AdamState:
    """First/second moments per parameter tensor plus the shared step count."""

    def __init__(self, params: list[np.ndarray]):
        self.step = 0
        self.m = [np.zeros_like(p) for p in params]
        self.v = [np.zeros_like(p) for p in params]


def adam_step(
    params: list[np.ndarray],
    grads: list[np.ndarray],
    state: AdamState,
    lr: float,
) -> None:
    """Bias-corrected Adam update applied in place."""
    if len(params) != len(grads) or len(params) != len(state.m):
        raise ShapeMismatch("params, grads, and state must align")
    state.step += 1
    t = state.step
    c1 = 1.0 - ADAM_BETA1**t
    c2 = 1.0 - ADAM_BETA2**t
    for p, g, m, v in zip(params, grads, state.m, state.v):
        if p.shape != g.shape:
            raise ShapeMismatch(f"grad shape {g.shape} != param shape {p.shape}")
        m *= ADAM_BETA1
        m += (1.0 - ADAM_BETA1) * g
        v *= ADAM_BETA2
        v += (1.0 - ADAM_BETA2) * (g * g)
        p -= lr * (m / c1) / (np.sqrt(v / c2) + ADAM_EPS)


# --- end-to-end loss/gradients through both heads -----------------------------

def pair_loss(
    g_head: ProjectionHead,
    t_head: ProjectionHead,
    x_graph: np.ndarray,
    x_text: np.ndarray,
    tau: float,
    weights: np.ndarray | None = None,
) -> float:
    g_proj, _ = forward_batch(g_head, x_graph)
    t_proj, _ = forward_batch(t_head, x_text)
    loss, _ = batch_loss(g_proj, t_proj, tau, weights)
    return loss


def pair_gradients(
    g_head: ProjectionHead,
    t_head: ProjectionHead,
    x_graph: np.ndarray,
    x_text: np.ndarray,
    tau: float,
    weights: np.ndarray | None = None,
) -> tuple[float, HeadGradients, HeadGradients]:
    """Loss plus full parameter gradients for one batch through both heads."""
    g_proj, g_cache = forward_batch(g_head, x_graph)
    t_proj, t_cache = forward_batch(t_head, x_text)
    loss, _ = batch_loss(g_proj, t_proj, tau, weights)
    d_g, d_t = loss_gradients(g_proj, t_proj, tau, weights)
    g_grads, _ = backward_batch(g_head, g_cache, d_g)
    t_grads, _ = backward_batch(t_head, t_cache, d_t)
    return loss, g_grads, t_grads


# --- training loop -------------------------------------------------------------

def _gather(paired: PairedDataset, ids: list[str]) -> tuple[np.ndarray, np.ndarray]:
    xg = np.stack([paired.graph.records[i] for i in ids]).astype(np.float64)
    xt = np.stack([paired.text.records[i] for i in ids]).astype(np.float64)
    return xg, xt


def _epoch_set_loss(
    g_head: ProjectionHead,
    t_head: ProjectionHead,
    paired: PairedDataset,
    ids: list[str],
    cfg: TrainConfig,
) -> float:
    """Mean per-sample loss over sorted-ID chunks with in-chunk negatives."""
    ordered = sorted(ids)
    total = 0.0
    for start in range(0, len(ordered), cfg.batch_size):
        chunk = ordered[start : start + cfg.batch_size]
        xg, xt = _gather(paired, chunk)
        loss = pair_loss(g_head, t_head, xg, xt, cfg.temperature)
        total += loss * len(chunk)
    return total / len(ordered)


def train_pair(
    paired: PairedDataset,
    split: DatasetSplit,
    g_head: ProjectionHead,
    t_head: ProjectionHead,
    cfg: TrainConfig,
) -> tuple[ProjectionHead, ProjectionHead, TrainHistory]:
    """Train both heads jointly, checkpointing on strict validation improvement.

    Returns the best-validation heads (the inputs are not mutated) and the
    per-epoch history. epochs=0 returns copies of the initial heads.
    """
    if g_head.config.input_dim != paired.graph.dim:
        raise ConfigMismatch("graph head input dim != graph embedding dim")
    if t_head.config.input_dim != paired.text.dim:
        raise ConfigMismatch("text head input dim != text embedding dim")
    if g_head.config.output_dim != t_head.config.output_dim:
        raise ConfigMismatch("heads must project into the same output dimension")

    g_head = g_head.copy()
    t_head = t_head.copy()
    history = TrainHistory()
    if cfg.epochs == 0:
        return g_head, t_head, history

    rare_ids = cfg.reweight.rare_ids if cfg.reweight else frozenset()
    factor = cfg.reweight.factor if cfg.reweight else 1.0

    params = g_head.parameters() + t_head.parameters()
    state = AdamState(params)
    shuffler = SplitMix64(cfg.seed)
    best_val = np.inf
    best = (g_head.copy(), t_head.copy())

    for _ in range(cfg.epochs):
        order = fisher_yates(sorted(split.train), shuffler)
        total = 0.0
        for start in range(0, len(order), cfg.batch_size):
            chunk = order[start : start + cfg.batch_size]
            xg, xt = _gather(paired, chunk)
            weights = np.array([factor if pid in rare_ids else 1.0 for pid in chunk])
            loss, g_grads, t_grads = pair_gradients(
                g_head, t_head, xg, xt, cfg.temperature, weights
            )
            adam_step(
                params,
                g_grads.parameters() + t_grads.parameters(),
                state,
                cfg.learning_rate,
            )
            total += loss * len(chunk)
        train_loss = total / len(order)
        val_loss = _epoch_set_loss(g_head, t_head, paired, split.validation, cfg)
        checkpointed = val_loss < best_val
        if checkpointed:
            best_val = val_loss
            best = (g_head.copy(), t_head.copy())
        history.train_loss.append(train_loss)
        history.val_loss.append(val_loss)
        history.checkpointed.append(checkpointed)

    return best[0], best[1], history
