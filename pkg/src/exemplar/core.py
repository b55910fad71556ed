"""Domain types, configuration validation, RNG streams and latent-box geometry.

Latent vectors are plain 1-D float64 numpy arrays confined to the box
[-u, u]^d.  A :class:`Specimen` bundles a latent position with its
per-lineage velocity and cached fitness; it is the unit the evolutionary
search selects and mutates.  Everything here is an immutable value type and
every function is pure, so all of it is safe to share across threads.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass
from typing import Optional, Union

import numpy as np

from .errors import ConfigError, DimensionError

__all__ = [
    "Specimen",
    "EsConfig",
    "GdConfig",
    "RunResult",
    "validate_config",
    "clamp_latent",
    "rng_streams",
    "as_latent",
]


def as_latent(values) -> np.ndarray:
    """Coerce to a finite 1-D float64 array; raise DimensionError otherwise."""
    z = np.asarray(values, dtype=np.float64)
    if z.ndim != 1 or z.size < 1:
        raise DimensionError(f"latent vector must be 1-D and non-empty, got shape {z.shape}")
    if not np.all(np.isfinite(z)):
        raise DimensionError("latent vector has non-finite components")
    return z


@dataclass(frozen=True)
class Specimen:
    """A search point: latent position, velocity, and cached fitness.

    ``fitness`` is None until the specimen has been decoded and scored by
    the classifier; once set it is the probability of the target class,
    in [0, 1].  Velocity has the same length as the latent vector and is
    expressed in latent units per generation.
    """

    latent: np.ndarray
    velocity: np.ndarray
    fitness: Optional[float] = None

    def __post_init__(self):
        lat = as_latent(self.latent)
        vel = np.asarray(self.velocity, dtype=np.float64)
        if vel.shape != lat.shape:
            raise DimensionError(
                f"velocity length {vel.shape} does not match latent length {lat.shape}"
            )
        if not np.all(np.isfinite(vel)):
            raise DimensionError("velocity has non-finite components")
        object.__setattr__(self, "latent", lat)
        object.__setattr__(self, "velocity", vel)
        if self.fitness is not None:
            f = float(self.fitness)
            if not (0.0 <= f <= 1.0):
                raise ConfigError(f"fitness must lie in [0, 1], got {f}")
            object.__setattr__(self, "fitness", f)

    @classmethod
    def fresh(cls, latent) -> "Specimen":
        """A new unscored specimen with zero velocity."""
        lat = as_latent(latent)
        return cls(latent=lat, velocity=np.zeros_like(lat), fitness=None)

    @property
    def scored(self) -> bool:
        return self.fitness is not None


@dataclass(frozen=True)
class EsConfig:
    """Hyperparameters of the evolutionary search.

    Defaults follow the published reference setting: initial population
    t=50, elite size k=10, latent boundary u=5, m=2 mutations per elite
    specimen with standard deviation s=0.5, momentum rate alpha=0.3, and a
    95% confidence threshold for convergence.
    """

    t: int = 50
    k: int = 10
    u: float = 5.0
    m: int = 2
    s: float = 0.5
    alpha: float = 0.3
    threshold: float = 0.95
    max_calls: int = 5000
    latent_dim: int = 4
    target_class: int = 0


@dataclass(frozen=True)
class GdConfig:
    """Hyperparameters of the gradient-ascent baseline.

    The step size and momentum coefficient default to 0.1 and 0.9; both are
    ordinary config fields and appear in config files as ``learning_rate``
    and ``momentum``.
    """

    learning_rate: float = 0.1
    momentum: float = 0.9
    u: float = 5.0
    threshold: float = 0.95
    max_calls: int = 5000
    latent_dim: int = 4
    target_class: int = 0


Config = Union[EsConfig, GdConfig]


def _check(cond: bool, message: str):
    if not cond:
        raise ConfigError(message)


def validate_config(cfg: Config) -> Config:
    """Return cfg unchanged if every invariant holds.

    Raises ConfigError naming the first violated constraint, checked in
    field order.
    """
    if isinstance(cfg, EsConfig):
        _check(cfg.t >= 1, f"t must be >= 1, got {cfg.t}")
        _check(cfg.k >= 1, f"k must be >= 1, got {cfg.k}")
        _check(cfg.k <= cfg.t, f"k must not exceed t (k={cfg.k}, t={cfg.t})")
        _check(cfg.u > 0, f"u must be > 0, got {cfg.u}")
        _check(cfg.m >= 1, f"m must be >= 1, got {cfg.m}")
        _check(cfg.s > 0, f"s must be > 0, got {cfg.s}")
        _check(cfg.alpha >= 0, f"alpha must be >= 0, got {cfg.alpha}")
        _check(cfg.alpha < 1, f"alpha must be < 1, got {cfg.alpha}")
    elif isinstance(cfg, GdConfig):
        _check(cfg.learning_rate > 0, f"learning_rate must be > 0, got {cfg.learning_rate}")
        _check(cfg.momentum >= 0, f"momentum must be >= 0, got {cfg.momentum}")
        _check(cfg.momentum < 1, f"momentum must be < 1, got {cfg.momentum}")
        _check(cfg.u > 0, f"u must be > 0, got {cfg.u}")
    else:
        raise ConfigError(f"unsupported config type {type(cfg).__name__}")
    _check(0 < cfg.threshold < 1, f"threshold must lie in (0, 1), got {cfg.threshold}")
    _check(cfg.max_calls >= 1, f"max_calls must be >= 1, got {cfg.max_calls}")
    _check(cfg.latent_dim >= 1, f"latent_dim must be >= 1, got {cfg.latent_dim}")
    _check(cfg.target_class >= 0, f"target_class must be >= 0, got {cfg.target_class}")
    for field in dataclasses.fields(cfg):
        value = getattr(cfg, field.name)
        if isinstance(value, float) and not np.isfinite(value):
            raise ConfigError(f"{field.name} must be finite, got {value}")
    return cfg


def clamp_latent(z: np.ndarray, u: float) -> np.ndarray:
    """Project componentwise onto [-u, u]; idempotent.

    Accepts a single vector or a batch (clamping is componentwise either
    way).  Non-finite input is rejected rather than silently saturated.
    """
    if u <= 0:
        raise ConfigError(f"u must be > 0, got {u}")
    z = np.asarray(z, dtype=np.float64)
    if not np.all(np.isfinite(z)):
        raise DimensionError("cannot clamp a non-finite latent vector")
    return np.clip(z, -u, u)


def rng_streams(master_seed: int, trial_index: int) -> np.random.Generator:
    """An independent, reproducible random stream for one trial.

    Splitting scheme: stream i is ``PCG64(SeedSequence(master_seed,
    spawn_key=(i,)))``.  SeedSequence hashes the (seed, spawn_key) pair, so
    the streams are statistically independent by construction and the same
    (master_seed, trial_index) always reproduces the same draws within a
    given numpy version.  Negative master seeds are folded into the 128-bit
    entropy pool via their 64-bit two's-complement image.
    """
    if trial_index < 0 or trial_index >= 2**32:
        raise ConfigError(f"trial_index must lie in [0, 2**32), got {trial_index}")
    entropy = int(master_seed) & 0xFFFFFFFFFFFFFFFF
    seq = np.random.SeedSequence(entropy=entropy, spawn_key=(int(trial_index),))
    return np.random.Generator(np.random.PCG64(seq))


@dataclass(frozen=True)
class RunResult:
    """Outcome of one optimization run (either algorithm).

    ``best_specimen`` is the highest-fitness specimen ever evaluated during
    the run; ``final_elite`` is the top-k of the final population (for the
    gradient baseline, the single best point).  ``model_calls`` counts
    individual sample evaluations by the classifier.
    """

    converged: bool
    model_calls: int
    generations: int
    wall_time: float
    best_specimen: Specimen
    final_elite: tuple[Specimen, ...]

    def __post_init__(self):
        if self.model_calls < 0 or self.generations < 0:
            raise ConfigError("model_calls and generations must be nonnegative")
        object.__setattr__(self, "final_elite", tuple(self.final_elite))
