"""Projection heads: 1-3 affine layers, interior ReLU, L2-normalized output.

Parameters are float64 end to end; incoming embeddings are cast up from the
float32 stored in EMB1 files. PHD1 checkpoint layout (little-endian):
magic "PHD1", u16 version=1, u8 layer_count, then per layer
u32 rows, u32 cols, rows*cols f64 row-major weights, rows f64 biases.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field

import numpy as np

from .errors import BadMagic, DegenerateOutput, ShapeMismatch, TruncatedFile, VersionUnsupported

NORM_EPS = 1e-12

PHD_MAGIC = b"PHD1"
PHD_VERSION = 1


@dataclass(frozen=True)
class HeadConfig:
    input_dim: int
    output_dim: int
    hidden_dims: tuple[int, ...] = ()
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "hidden_dims", tuple(self.hidden_dims))
        if self.input_dim <= 0 or self.output_dim <= 0 or any(d <= 0 for d in self.hidden_dims):
            raise ShapeMismatch("all layer dimensions must be positive")
        if len(self.hidden_dims) > 2:
            raise ShapeMismatch("at most 2 hidden layers (3 affine layers total)")

    @property
    def layer_dims(self) -> list[tuple[int, int]]:
        """(fan_in, fan_out) per affine layer, input to output."""
        chain = [self.input_dim, *self.hidden_dims, self.output_dim]
        return list(zip(chain[:-1], chain[1:]))


@dataclass
class ProjectionHead:
    layers: list[tuple[np.ndarray, np.ndarray]]  # (W out x in, b out)
    config: HeadConfig

    def parameters(self) -> list[np.ndarray]:
        """Flat list [W1, b1, W2, b2, ...] referencing the live arrays."""
        out = []
        for w, b in self.layers:
            out.append(w)
            out.append(b)
        return out

    def copy(self) -> "ProjectionHead":
        return ProjectionHead(
            layers=[(w.copy(), b.copy()) for w, b in self.layers], config=self.config
        )


@dataclass
class HeadGradients:
    layers: list[tuple[np.ndarray, np.ndarray]]

    def parameters(self) -> list[np.ndarray]:
        out = []
        for w, b in self.layers:
            out.append(w)
            out.append(b)
        return out


def init_head(config: HeadConfig) -> ProjectionHead:
    """Glorot-uniform weights from the seeded generator, zero biases.

    Layers are drawn in order; each weight matrix fills row-major.
    """
    rng = np.random.default_rng(config.seed)
    layers = []
    for fan_in, fan_out in config.layer_dims:
        a = np.sqrt(6.0 / (fan_in + fan_out))
        w = rng.uniform(-a, a, size=(fan_out, fan_in))
        b = np.zeros(fan_out)
        layers.append((w, b))
    return ProjectionHead(layers=layers, config=config)


def forward_batch(head: ProjectionHead, x: np.ndarray) -> tuple[np.ndarray, dict]:
    """Project a batch (n, input_dim) -> unit rows (n, output_dim) plus cache.

    The cache holds the per-layer inputs, pre-activations, raw outputs, norms
    and normalized outputs needed by backward_batch.
    """
    x = np.atleast_2d(np.asarray(x, dtype=np.float64))
    if x.shape[1] != head.config.input_dim:
        raise ShapeMismatch(
            f"input dim {x.shape[1]} != head input dim {head.config.input_dim}"
        )
    if not np.all(np.isfinite(x)):
        raise ShapeMismatch("non-finite values in head input")
    n_layers = len(head.layers)
    inputs = []  # activation entering each layer
    pre = []  # pre-activation of each layer
    h = x
    for k, (w, b) in enumerate(head.layers):
        inputs.append(h)
        z = h @ w.T + b
        pre.append(z)
        h = np.maximum(z, 0.0) if k < n_layers - 1 else z
    y_raw = h
    norms = np.sqrt(np.sum(y_raw * y_raw, axis=1))
    if np.any(norms <= NORM_EPS):
        bad = int(np.argmax(norms <= NORM_EPS))
        raise DegenerateOutput(f"all-zero projection for batch row {bad}")
    y = y_raw / norms[:, None]
    cache = {"inputs": inputs, "pre": pre, "y_raw": y_raw, "norms": norms, "y": y}
    return y, cache


def forward(head: ProjectionHead, x: np.ndarray) -> np.ndarray:
    """Project a single vector; returns the unit-normalized output."""
    y, _ = forward_batch(head, np.asarray(x, dtype=np.float64)[None, :])
    return y[0]


def backward_batch(
    head: ProjectionHead, cache: dict, upstream: np.ndarray
) -> tuple[HeadGradients, np.ndarray]:
    """Backpropagate per-sample gradients w.r.t. the normalized outputs.

    Returns parameter gradients summed over the batch and the gradient
    w.r.t. the batch input.
    """
    upstream = np.asarray(upstream, dtype=np.float64)
    y = cache["y"]
    if upstream.shape != y.shape:
        raise ShapeMismatch(f"upstream shape {upstream.shape} != output shape {y.shape}")
    # Normalization Jacobian: (I - y y^T) / ||y_raw|| applied per sample.
    inner = np.sum(y * upstream, axis=1, keepdims=True)
    d = (upstream - inner * y) / cache["norms"][:, None]

    n_layers = len(head.layers)
    grads: list[tuple[np.ndarray, np.ndarray]] = [None] * n_layers
    for k in range(n_layers - 1, -1, -1):
        w, _ = head.layers[k]
        if k < n_layers - 1:
            d = d * (cache["pre"][k] > 0.0)
        gw = d.T @ cache["inputs"][k]
        gb = d.sum(axis=0)
        grads[k] = (gw, gb)
        d = d @ w
    return HeadGradients(layers=grads), d


# --- checkpoint I/O ----------------------------------------------------------

def save_head(head: ProjectionHead, path: str) -> None:
    with open(path, "wb") as fh:
        fh.write(PHD_MAGIC)
        fh.write(struct.pack("<HB", PHD_VERSION, len(head.layers)))
        for w, b in head.layers:
            rows, cols = w.shape
            fh.write(struct.pack("<II", rows, cols))
            fh.write(np.ascontiguousarray(w, dtype="<f8").tobytes())
            fh.write(np.asarray(b, dtype="<f8").tobytes())


def load_head(path: str) -> ProjectionHead:
    with open(path, "rb") as fh:
        magic = fh.read(4)
        if magic != PHD_MAGIC:
            raise BadMagic(f"{path}: bad magic {magic!r}")
        meta = fh.read(3)
        if len(meta) < 3:
            raise TruncatedFile(f"{path}: header truncated")
        version, n_layers = struct.unpack("<HB", meta)
        if version != PHD_VERSION:
            raise VersionUnsupported(f"{path}: version {version}")
        layers = []
        for k in range(n_layers):
            dims = fh.read(8)
            if len(dims) < 8:
                raise ShapeMismatch(f"{path}: layer {k} header truncated")
            rows, cols = struct.unpack("<II", dims)
            wb = fh.read(8 * rows * cols)
            bb = fh.read(8 * rows)
            if len(wb) < 8 * rows * cols or len(bb) < 8 * rows:
                raise ShapeMismatch(f"{path}: layer {k} data truncated")
            w = np.frombuffer(wb, dtype="<f8").reshape(rows, cols).copy()
            b = np.frombuffer(bb, dtype="<f8").copy()
            layers.append((w, b))
    if not layers:
        raise ShapeMismatch(f"{path}: no layers")
    chain = [layers[0][0].shape[1]] + [w.shape[0] for w, _ in layers]
    for k in range(1, len(layers)):
        if layers[k][0].shape[1] != chain[k]:
            raise ShapeMismatch(f"{path}: layer {k} input dim breaks the chain")
    config = HeadConfig(
        input_dim=chain[0], output_dim=chain[-1], hidden_dims=tuple(chain[1:-1]), seed=0
    )
    return ProjectionHead(layers=layers, config=config)


# --- built-in hidden-dimension presets ---------------------------------------

GDM_DIMS = {"gearnet": 3072, "gvp": 148, "scannet": 128, "gat": 64}
LLM_DIMS = {"gemma2-2b": 2304, "llama3.1-8b": 4096, "llama3.1-70b": 8192}

# hidden dims for the structure-side head, keyed by (is_gearnet, llm_dim, layers)
_HIDDEN_PRESETS = {
    (True, 2304, 2): (2560,),
    (True, 4096, 2): (3584,),
    (True, 8192, 2): (4096,),
    (True, 2304, 3): (2816, 2560),
    (True, 4096, 3): (3584, 3840),
    (True, 8192, 3): (4096, 6144),
    (False, 2304, 2): (1024,),
    (False, 4096, 2): (2048,),
    (False, 8192, 2): (4096,),
    (False, 2304, 3): (512, 1024),
    (False, 4096, 3): (512, 2048),
    (False, 8192, 3): (1024, 4096),
}


def preset_configs(
    gdm: str, llm: str, layers: int, seed: int = 0
) -> tuple[HeadConfig, HeadConfig]:
    """Built-in (structure-head, text-head) configs for a model pair.

    Only the structure-side head gains extra layers; the text-side head is
    always a single affine layer mapping the LLM dimension to itself.
    """
    gdm_key, llm_key = gdm.lower(), llm.lower()
    if gdm_key not in GDM_DIMS:
        raise ShapeMismatch(f"unknown structure model {gdm!r}; known: {sorted(GDM_DIMS)}")
    if llm_key not in LLM_DIMS:
        raise ShapeMismatch(f"unknown language model {llm!r}; known: {sorted(LLM_DIMS)}")
    if layers not in (1, 2, 3):
        raise ShapeMismatch("layer count must be 1, 2, or 3")
    in_dim, out_dim = GDM_DIMS[gdm_key], LLM_DIMS[llm_key]
    if layers == 1:
        hidden: tuple[int, ...] = ()
    else:
        hidden = _HIDDEN_PRESETS[(gdm_key == "gearnet", out_dim, layers)]
    g_cfg = HeadConfig(input_dim=in_dim, output_dim=out_dim, hidden_dims=hidden, seed=seed)
    t_cfg = HeadConfig(input_dim=out_dim, output_dim=out_dim, hidden_dims=(), seed=seed + 1)
    return g_cfg, t_cfg
