"""Black-box classifier contract and its desk-scale implementations.

An oracle maps a batch of sample vectors to one probability row per sample.
Two in-process toy families are provided: a centroid-softmax model (probability
falls off with squared distance to each class centroid, giving a controllable
multimodal landscape) and a small tanh MLP with softmax output (analytically
differentiable, which the gradient baseline needs).  A third implementation,
:class:`SubprocessOracle`, wraps any external process speaking the line-JSON
plugin protocol so the classifier stays a true black box.

Oracles must be deterministic: repeated calls on identical input yield
identical output.  Benchmark call counts are only meaningful under that
contract.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Protocol, runtime_checkable

import numpy as np

from . import kernels
from .errors import DimensionError, ModelFormatError

__all__ = [
    "OracleContract",
    "CentroidSoftmaxModel",
    "ToyMlpModel",
    "centroid_softmax_predict",
    "toy_mlp_predict",
    "check_probability_rows",
    "load_mlp",
    "save_mlp",
    "read_mlp_layers",
    "write_mlp_layers",
]

ROW_SUM_TOL = 1e-9  # in-process oracles
WIRE_SUM_TOL = 1e-6  # rows that crossed a process boundary


@runtime_checkable
class OracleContract(Protocol):
    """What the optimizer needs from a classifier."""

    num_classes: int
    sample_dim: int

    def predict_batch(self, samples: np.ndarray) -> np.ndarray: ...


def as_sample_batch(samples, dim: int, what: str = "sample") -> np.ndarray:
    """Coerce to a finite (n, dim) float64 batch."""
    x = np.ascontiguousarray(samples, dtype=np.float64)
    if x.ndim == 1:
        x = x.reshape(1, -1) if x.size else x.reshape(0, dim)
    if x.ndim != 2 or (x.shape[0] > 0 and x.shape[1] != dim):
        raise DimensionError(f"expected {what} batch of width {dim}, got shape {x.shape}")
    if x.shape[1] != dim:
        x = x.reshape(0, dim)
    if not np.all(np.isfinite(x)):
        raise DimensionError(f"{what} batch has non-finite entries")
    return x


def check_probability_rows(rows: np.ndarray, count: int, num_classes: int,
                           tol: float = ROW_SUM_TOL) -> np.ndarray:
    """Validate a probability matrix: shape, finiteness, range, row sums."""
    rows = np.asarray(rows, dtype=np.float64)
    if rows.ndim != 2 or rows.shape[0] != count:
        raise DimensionError(f"row count mismatch: expected {count}, got {rows.shape[0] if rows.ndim == 2 else rows.shape}")
    if rows.shape[1] != num_classes:
        raise DimensionError(f"expected {num_classes} classes per row, got {rows.shape[1]}")
    if count and not np.all(np.isfinite(rows)):
        raise DimensionError("probability rows contain non-finite entries")
    if count and (rows.min() < -tol or rows.max() > 1 + tol):
        raise DimensionError("probability entries outside [0, 1]")
    if count:
        err = np.abs(rows.sum(axis=1) - 1.0).max()
        if err > tol:
            raise DimensionError(f"normalization violated: row sums deviate from 1 by {err:.3g}")
    return rows


@dataclass(frozen=True)
class CentroidSoftmaxModel:
    """Softmax over negative squared distances to per-class centroids.

    p_c(x) = exp(-||x - mu_c||^2 / tau) / sum_j exp(-||x - mu_j||^2 / tau).
    Exponentials underflow gracefully: classes much farther than sqrt(745*tau)
    beyond the best class get probability exactly 0.
    """

    centroids: np.ndarray  # (num_classes, sample_dim)
    tau: float

    def __post_init__(self):
        c = np.ascontiguousarray(self.centroids, dtype=np.float64)
        if c.ndim != 2 or c.shape[0] < 2:
            raise DimensionError(f"need a (classes, dim) centroid matrix with >= 2 classes, got {c.shape}")
        if not np.all(np.isfinite(c)):
            raise DimensionError("centroids must be finite")
        if not self.tau > 0:
            raise DimensionError(f"tau must be > 0, got {self.tau}")
        object.__setattr__(self, "centroids", c)
        object.__setattr__(self, "tau", float(self.tau))

    @property
    def num_classes(self) -> int:
        return self.centroids.shape[0]

    @property
    def sample_dim(self) -> int:
        return self.centroids.shape[1]

    def predict_batch(self, samples) -> np.ndarray:
        return centroid_softmax_predict(self, samples)


def centroid_softmax_predict(model: CentroidSoftmaxModel, samples) -> np.ndarray:
    x = as_sample_batch(samples, model.sample_dim)
    if x.shape[0] == 0:
        return np.zeros((0, model.num_classes))
    return kernels.centroid_probs(x, model.centroids, model.tau)


@dataclass(frozen=True)
class ToyMlpModel:
    """Small dense network: tanh hidden layers, softmax output.

    ``layers`` is a tuple of (weight, bias) pairs with weight laid out
    (out, in); consecutive widths must chain and the final width is the
    class count.
    """

    layers: tuple

    def __post_init__(self):
        object.__setattr__(self, "layers", _normalize_layers(self.layers))

    @property
    def num_classes(self) -> int:
        return self.layers[-1][0].shape[0]

    @property
    def sample_dim(self) -> int:
        return self.layers[0][0].shape[1]

    def predict_batch(self, samples) -> np.ndarray:
        return toy_mlp_predict(self, samples)


def _normalize_layers(layers) -> tuple:
    if not layers:
        raise DimensionError("model needs at least one layer")
    out = []
    prev = None
    for i, (w, b) in enumerate(layers):
        w = np.ascontiguousarray(w, dtype=np.float64)
        b = np.ascontiguousarray(b, dtype=np.float64)
        if w.ndim != 2 or b.ndim != 1 or b.shape[0] != w.shape[0]:
            raise DimensionError(f"layer {i}: weight must be (out, in) and bias (out,), got {w.shape} / {b.shape}")
        if not (np.all(np.isfinite(w)) and np.all(np.isfinite(b))):
            raise DimensionError(f"layer {i} has non-finite parameters")
        if prev is not None and w.shape[1] != prev:
            raise DimensionError(
                f"layer {i} input width {w.shape[1]} does not match previous output width {prev}"
            )
        prev = w.shape[0]
        out.append((w, b))
    return tuple(out)


def _mlp_hidden_pass(layers, x: np.ndarray) -> np.ndarray:
    """Forward through all layers but the last, tanh after each."""
    h = x
    for w, b in layers[:-1]:
        h = kernels.tanh_rows(kernels.dense(h, w, b))
    return h


def toy_mlp_predict(model: ToyMlpModel, samples) -> np.ndarray:
    x = as_sample_batch(samples, model.sample_dim)
    if x.shape[0] == 0:
        return np.zeros((0, model.num_classes))
    h = _mlp_hidden_pass(model.layers, x)
    w, b = model.layers[-1]
    return kernels.softmax_rows(kernels.dense(h, w, b))


# ---------------------------------------------------------------------------
# Model file format
#
# Plain text, whitespace-tokenized, one statement per line:
#
#   toy-mlp 1
#   output softmax          (or: output tanh, for decoders)
#   layers <count>
#   layer <index> <in> <out>
#   weights <in*out floats, row-major over output units>
#   bias <out floats>
#   ... repeated per layer ...
#
# Floats are written with repr(), so save(load(path)) is byte-identical for
# canonical files.
# ---------------------------------------------------------------------------

_MAGIC = "toy-mlp"
_FORMAT_VERSION = 1


def write_mlp_layers(layers, output_activation: str) -> str:
    """Render layers to the canonical text form."""
    layers = _normalize_layers(layers)
    if output_activation not in ("softmax", "tanh"):
        raise ModelFormatError(f"unknown output activation {output_activation!r}")
    lines = [f"{_MAGIC} {_FORMAT_VERSION}", f"output {output_activation}", f"layers {len(layers)}"]
    for i, (w, b) in enumerate(layers):
        lines.append(f"layer {i} {w.shape[1]} {w.shape[0]}")
        lines.append("weights " + " ".join(repr(v) for v in w.ravel()))
        lines.append("bias " + " ".join(repr(v) for v in b))
    return "\n".join(lines) + "\n"


def read_mlp_layers(path) -> tuple:
    """Parse a model file; returns (layers, output_activation).

    Dimension-chain violations name the offending layer.
    """
    try:
        with open(path, "r", encoding="utf-8") as fh:
            raw = [ln.strip() for ln in fh if ln.strip()]
    except OSError as exc:
        raise ModelFormatError(f"cannot read model file {path}: {exc}") from exc
    lines = iter(raw)

    def next_line(expect: str) -> list:
        try:
            parts = next(lines).split()
        except StopIteration:
            raise ModelFormatError(f"unexpected end of file, expected {expect!r} line") from None
        if parts[0] != expect:
            raise ModelFormatError(f"expected {expect!r} line, got {parts[0]!r}")
        return parts[1:]

    header = next_line(_MAGIC)
    if header != [str(_FORMAT_VERSION)]:
        raise ModelFormatError(f"unsupported format version {' '.join(header)!r}")
    (activation,) = next_line("output")
    if activation not in ("softmax", "tanh"):
        raise ModelFormatError(f"unknown output activation {activation!r}")
    (count,) = next_line("layers")
    layers = []
    try:
        for i in range(int(count)):
            idx, width_in, width_out = (int(v) for v in next_line("layer"))
            if idx != i:
                raise ModelFormatError(f"layer index {idx} out of order, expected {i}")
            weights = np.array([float(v) for v in next_line("weights")])
            bias = np.array([float(v) for v in next_line("bias")])
            if weights.size != width_in * width_out:
                raise ModelFormatError(
                    f"layer {i} declares {width_in}x{width_out} but carries {weights.size} weights"
                )
            if bias.size != width_out:
                raise ModelFormatError(f"layer {i} bias length {bias.size} != output width {width_out}")
            layers.append((weights.reshape(width_out, width_in), bias))
    except ValueError as exc:
        raise ModelFormatError(f"malformed number in model file: {exc}") from exc
    try:
        layers = _normalize_layers(layers)
    except DimensionError as exc:
        raise ModelFormatError(str(exc)) from exc
    return layers, activation


def load_mlp(path) -> ToyMlpModel:
    """Load a softmax-output classifier from the documented text format."""
    layers, activation = read_mlp_layers(path)
    if activation != "softmax":
        raise ModelFormatError(f"classifier model requires softmax output, file declares {activation!r}")
    return ToyMlpModel(layers=layers)


def save_mlp(model: ToyMlpModel, path) -> None:
    """Write the canonical serialization (round-trips byte-identically)."""
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(write_mlp_layers(model.layers, "softmax"))
