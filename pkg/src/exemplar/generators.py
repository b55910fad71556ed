"""Generator contract and toy decoders from latent space to sample space.

A generator maps a batch of latent vectors to a batch of sample vectors,
deterministically and in order.  Three in-process decoders are provided:
identity (search the oracle's own input space directly), affine, and a
small tanh-output MLP whose bounded, nonlinear image makes the composite
fitness landscape non-convex.  External decoders attach through
:class:`exemplar.plugin.SubprocessGenerator`.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Protocol, runtime_checkable

import numpy as np

from . import kernels
from .errors import DimensionError, ModelFormatError
from .oracles import _mlp_hidden_pass, _normalize_layers, as_sample_batch, read_mlp_layers, write_mlp_layers

__all__ = [
    "GeneratorContract",
    "IdentityDecoder",
    "AffineDecoder",
    "MlpDecoder",
    "identity_decode",
    "affine_decode",
    "mlp_decode",
    "load_mlp_decoder",
    "save_mlp_decoder",
]


@runtime_checkable
class GeneratorContract(Protocol):
    """What the optimizer needs from a decoder."""

    latent_dim: int
    sample_dim: int

    def decode_batch(self, latents: np.ndarray) -> np.ndarray: ...


@dataclass(frozen=True)
class IdentityDecoder:
    """Sample space is latent space; decoding is a no-op."""

    dim: int

    def __post_init__(self):
        if self.dim < 1:
            raise DimensionError(f"dim must be >= 1, got {self.dim}")

    @property
    def latent_dim(self) -> int:
        return self.dim

    @property
    def sample_dim(self) -> int:
        return self.dim

    def decode_batch(self, latents) -> np.ndarray:
        return identity_decode(latents, self.dim)


def identity_decode(latents, dim: int | None = None) -> np.ndarray:
    z = np.ascontiguousarray(latents, dtype=np.float64)
    if dim is not None:
        z = as_sample_batch(z, dim, what="latent")
    return z


@dataclass(frozen=True)
class AffineDecoder:
    """x = weight @ z + bias, with weight laid out (sample_dim, latent_dim)."""

    weight: np.ndarray
    bias: np.ndarray

    def __post_init__(self):
        w = np.ascontiguousarray(self.weight, dtype=np.float64)
        b = np.ascontiguousarray(self.bias, dtype=np.float64)
        if w.ndim != 2 or b.ndim != 1 or b.shape[0] != w.shape[0]:
            raise DimensionError(f"weight must be (sample, latent) and bias (sample,), got {w.shape} / {b.shape}")
        if not (np.all(np.isfinite(w)) and np.all(np.isfinite(b))):
            raise DimensionError("decoder parameters must be finite")
        object.__setattr__(self, "weight", w)
        object.__setattr__(self, "bias", b)

    @property
    def latent_dim(self) -> int:
        return self.weight.shape[1]

    @property
    def sample_dim(self) -> int:
        return self.weight.shape[0]

    def decode_batch(self, latents) -> np.ndarray:
        return affine_decode(self, latents)


def affine_decode(dec: AffineDecoder, latents) -> np.ndarray:
    z = as_sample_batch(latents, dec.latent_dim, what="latent")
    if z.shape[0] == 0:
        return np.zeros((0, dec.sample_dim))
    return kernels.dense(z, dec.weight, dec.bias)


@dataclass(frozen=True)
class MlpDecoder:
    """Dense network with tanh after every layer, output bounded in (-1, 1)."""

    layers: tuple

    def __post_init__(self):
        object.__setattr__(self, "layers", _normalize_layers(self.layers))

    @property
    def latent_dim(self) -> int:
        return self.layers[0][0].shape[1]

    @property
    def sample_dim(self) -> int:
        return self.layers[-1][0].shape[0]

    def decode_batch(self, latents) -> np.ndarray:
        return mlp_decode(self, latents)


def mlp_decode(dec: MlpDecoder, latents) -> np.ndarray:
    z = as_sample_batch(latents, dec.latent_dim, what="latent")
    if z.shape[0] == 0:
        return np.zeros((0, dec.sample_dim))
    h = _mlp_hidden_pass(dec.layers, z)
    w, b = dec.layers[-1]
    return kernels.tanh_rows(kernels.dense(h, w, b))


def load_mlp_decoder(path) -> MlpDecoder:
    """Load a tanh-output decoder from the shared model file format."""
    layers, activation = read_mlp_layers(path)
    if activation != "tanh":
        raise ModelFormatError(f"decoder model requires tanh output, file declares {activation!r}")
    return MlpDecoder(layers=layers)


def save_mlp_decoder(dec: MlpDecoder, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(write_mlp_layers(dec.layers, "tanh"))
