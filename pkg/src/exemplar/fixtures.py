"""Named deterministic (generator, oracle) pairs used by tests, benchmarks and the CLI.

Each fixture defines a reproducible fitness landscape at desk scale:

* ``easy``        - the target class dominates the whole latent box, so any
                    initial population converges immediately.
* ``multimodal``  - three well-separated class centroids over a 4-d latent
                    box; the target basin is compact and away from most of
                    the box, so populations must travel to it.  This is the
                    workhorse landscape for convergence statistics.
* ``saddle``      - a symmetric trap for gradient ascent: two decoy
                    centroids flank the origin, the target centroid sits far
                    behind the box edge, and the target probability (and so
                    its gradient) underflows to exactly zero on the lower
                    half of the box.  Ascent started at the origin is
                    exactly stationary forever, while the evolutionary
                    search climbs the live upper region to the narrow
                    high-confidence wedge at the box face.
* ``affine-centroid`` / ``affine-mlp`` / ``mlpdec-centroid`` / ``mlpdec-mlp``
                  - the four differentiable decoder/classifier combinations,
                    with parameter scales chosen to keep gradients healthy;
                    these back the gradient checker.

Model parameters are generated from fixed internal seeds, so every build of
a fixture is identical.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass

import numpy as np

from .core import EsConfig, GdConfig
from .errors import ConfigError
from .generators import AffineDecoder, IdentityDecoder, MlpDecoder
from .oracles import CentroidSoftmaxModel, ToyMlpModel

__all__ = [
    "Fixture",
    "PluginFixture",
    "get_fixture",
    "list_fixtures",
    "seeded_affine_decoder",
    "seeded_mlp_decoder",
    "seeded_mlp_oracle",
    "seeded_centroid_oracle",
]

_BUILDERS: dict = {}
_FIXTURES: dict = {}


@dataclass(frozen=True)
class Fixture:
    """A named, reproducible landscape.  ``build`` returns fresh components."""

    name: str
    latent_dim: int
    target_class: int
    differentiable: bool
    description: str

    def build(self):
        return _BUILDERS[self.name]()

    def es_config(self, **overrides) -> EsConfig:
        base = EsConfig(latent_dim=self.latent_dim, target_class=self.target_class)
        return dataclasses.replace(base, **overrides)

    def gd_config(self, **overrides) -> GdConfig:
        base = GdConfig(latent_dim=self.latent_dim, target_class=self.target_class)
        return dataclasses.replace(base, **overrides)


def _fixture(name: str, latent_dim: int, target_class: int, differentiable: bool,
             description: str):
    def wrap(fn):
        _BUILDERS[name] = fn
        _FIXTURES[name] = Fixture(name, latent_dim, target_class, differentiable, description)
        return fn

    return wrap


def get_fixture(name: str) -> Fixture:
    try:
        return _FIXTURES[name]
    except KeyError:
        raise ConfigError(f"unknown fixture {name!r}; available: {', '.join(sorted(_FIXTURES))}") from None


def list_fixtures() -> list[str]:
    return sorted(_FIXTURES)


@dataclass(frozen=True)
class PluginFixture:
    """A fixture where one or both sides live behind a plugin command.

    Sides without a command come from the named base fixture.  Every
    ``build`` launches fresh child processes, so each benchmark worker owns
    its own children.  Plugin-backed models expose no analytic gradients.
    """

    latent_dim: int
    target_class: int
    oracle_cmd: str | None = None
    generator_cmd: str | None = None
    base: str | None = None
    name: str = "plugin"
    differentiable: bool = False

    def __post_init__(self):
        if self.oracle_cmd is None and self.generator_cmd is None:
            raise ConfigError("plugin fixture needs at least one plugin command")
        if (self.oracle_cmd is None or self.generator_cmd is None) and self.base is None:
            raise ConfigError("plugin fixture with one command needs a base fixture for the other side")

    def build(self):
        from .plugin import SubprocessGenerator, SubprocessOracle

        base_gen = base_oracle = None
        if self.base is not None:
            base_gen, base_oracle = get_fixture(self.base).build()
        gen = SubprocessGenerator(self.generator_cmd) if self.generator_cmd else base_gen
        oracle = SubprocessOracle(self.oracle_cmd) if self.oracle_cmd else base_oracle
        return gen, oracle

    def es_config(self, **overrides) -> EsConfig:
        base = EsConfig(latent_dim=self.latent_dim, target_class=self.target_class)
        return dataclasses.replace(base, **overrides)

    def gd_config(self, **overrides) -> GdConfig:
        base = GdConfig(latent_dim=self.latent_dim, target_class=self.target_class)
        return dataclasses.replace(base, **overrides)


# --------------------------------------------------------------------------
# Seeded component builders (shared by fixtures and tests)
# --------------------------------------------------------------------------


def seeded_affine_decoder(seed: int, latent_dim: int, sample_dim: int) -> AffineDecoder:
    rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed)))
    weight = rng.normal(0.0, 0.6, size=(sample_dim, latent_dim))
    bias = rng.normal(0.0, 0.1, size=sample_dim)
    return AffineDecoder(weight=weight, bias=bias)


def seeded_mlp_decoder(seed: int, widths: tuple, gain: float = 1.4) -> MlpDecoder:
    return MlpDecoder(layers=_seeded_layers(seed, widths, gain))


def seeded_mlp_oracle(seed: int, widths: tuple, gain: float = 1.3) -> ToyMlpModel:
    return ToyMlpModel(layers=_seeded_layers(seed, widths, gain))


def _seeded_layers(seed: int, widths: tuple, gain: float) -> tuple:
    rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed)))
    layers = []
    for fan_in, fan_out in zip(widths[:-1], widths[1:]):
        w = rng.normal(0.0, gain / np.sqrt(fan_in), size=(fan_out, fan_in))
        b = rng.normal(0.0, 0.1, size=fan_out)
        layers.append((w, b))
    return tuple(layers)


def seeded_centroid_oracle(seed: int, num_classes: int, sample_dim: int,
                           spread: float, tau: float) -> CentroidSoftmaxModel:
    rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed)))
    centroids = rng.uniform(-spread, spread, size=(num_classes, sample_dim))
    return CentroidSoftmaxModel(centroids=centroids, tau=tau)


# --------------------------------------------------------------------------
# Landscape definitions
# --------------------------------------------------------------------------


@_fixture("easy", latent_dim=4, target_class=0, differentiable=True,
          description="target class dominates the whole box; converges at initialization")
def _build_easy():
    centroids = np.array([
        [0.0, 0.0, 0.0, 0.0],
        [30.0, 0.0, 0.0, 0.0],
    ])
    return IdentityDecoder(4), CentroidSoftmaxModel(centroids=centroids, tau=4.0)


@_fixture("multimodal", latent_dim=4, target_class=0, differentiable=True,
          description="three separated class centroids; compact target basin")
def _build_multimodal():
    centroids = np.array([
        [2.5, 2.5, 2.5, 2.5],
        [-2.5, -2.5, -2.5, -2.5],
        [2.5, -2.5, -2.5, 2.5],
    ])
    return IdentityDecoder(4), CentroidSoftmaxModel(centroids=centroids, tau=8.0)


@_fixture("saddle", latent_dim=2, target_class=0, differentiable=True,
          description="symmetric stationary trap at the origin; target probability "
                      "underflows to exactly zero on the lower half of the box")
def _build_saddle():
    centroids = np.array([
        [0.0, 39.0],
        [34.2, 0.0],
        [-34.2, 0.0],
    ])
    return IdentityDecoder(2), CentroidSoftmaxModel(centroids=centroids, tau=2.0)


@_fixture("affine-centroid", latent_dim=3, target_class=0, differentiable=True,
          description="affine decoder into a 4-class centroid landscape")
def _build_affine_centroid():
    return (
        seeded_affine_decoder(101, latent_dim=3, sample_dim=5),
        seeded_centroid_oracle(102, num_classes=4, sample_dim=5, spread=2.5, tau=10.0),
    )


@_fixture("affine-mlp", latent_dim=3, target_class=0, differentiable=True,
          description="affine decoder into a small tanh/softmax classifier")
def _build_affine_mlp():
    return (
        seeded_affine_decoder(101, latent_dim=3, sample_dim=5),
        seeded_mlp_oracle(103, widths=(5, 8, 4), gain=1.3),
    )


@_fixture("mlpdec-centroid", latent_dim=3, target_class=0, differentiable=True,
          description="tanh MLP decoder into a centroid landscape on (-1,1)^5")
def _build_mlpdec_centroid():
    return (
        seeded_mlp_decoder(104, widths=(3, 8, 5), gain=1.4),
        seeded_centroid_oracle(105, num_classes=4, sample_dim=5, spread=0.8, tau=1.5),
    )


@_fixture("mlpdec-mlp", latent_dim=3, target_class=0, differentiable=True,
          description="tanh MLP decoder into a tanh/softmax classifier")
def _build_mlpdec_mlp():
    return (
        seeded_mlp_decoder(104, widths=(3, 8, 5), gain=1.4),
        seeded_mlp_oracle(106, widths=(5, 8, 4), gain=2.0),
    )
