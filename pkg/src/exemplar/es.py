"""Elitist evolutionary search with momentum over a bounded latent box.

One generation: rank the scored population, keep the k best (the elite),
spawn m offspring from each elite specimen, decode and score all offspring
in a single batched generator call followed by a single batched oracle
call.  The mutation that creates an offspring updates a per-lineage
velocity,

    v' = alpha * v + eps,        eps ~ Normal(0, s^2 I)
    z' = clamp(z + v', [-u, u])

so consistent fitness improvements along a lineage compound into larger,
directed steps, while the clamp keeps every specimen inside the box.  The
offspring inherits v', letting momentum accumulate; the elite themselves
are carried over unchanged, fitness cached, so the best-so-far never
regresses and nothing is ever re-evaluated.

A memoryless variant (``mutation="plain"``, z' = clamp(z + eps)) is kept as
a separate code path rather than an alpha=0 special case; the two are
provably trajectory-identical at alpha=0, which the test suite checks
bit-for-bit.

The search converges when the whole elite scores at or above the
confidence threshold (or, with ``converge_on="best"``, when any specimen
does).  All state is immutable; every step is a pure function of
(state, config, rng), so a run is reproducible from its seed.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, replace
from typing import Sequence

import numpy as np

from . import kernels
from .core import EsConfig, RunResult, Specimen, validate_config
from .errors import ConfigError, DimensionError
from .generators import GeneratorContract
from .oracles import OracleContract

__all__ = [
    "EsState",
    "init_population",
    "evaluate_unscored",
    "select_elite",
    "mutate_specimen",
    "es_step",
    "check_convergence",
    "run_es",
    "MUTATIONS",
]

MUTATIONS = ("momentum", "plain")


@dataclass(frozen=True)
class EsState:
    """Population snapshot: row i of each array describes specimen i.

    ``fitness`` uses NaN for not-yet-scored rows.  ``converged`` is set by
    the run loop once its convergence criterion fires; the stepping
    functions themselves never touch it.  Treat the arrays as read-only.
    """

    latents: np.ndarray  # (n, d)
    velocities: np.ndarray  # (n, d)
    fitness: np.ndarray  # (n,), NaN = unscored
    generation: int = 0
    model_calls: int = 0
    converged: bool = False

    def __post_init__(self):
        lat = np.ascontiguousarray(self.latents, dtype=np.float64)
        vel = np.ascontiguousarray(self.velocities, dtype=np.float64)
        fit = np.ascontiguousarray(self.fitness, dtype=np.float64)
        if lat.ndim != 2 or vel.shape != lat.shape or fit.shape != (lat.shape[0],):
            raise DimensionError(
                f"inconsistent state shapes: latents {lat.shape}, velocities {vel.shape}, fitness {fit.shape}"
            )
        object.__setattr__(self, "latents", lat)
        object.__setattr__(self, "velocities", vel)
        object.__setattr__(self, "fitness", fit)

    @property
    def size(self) -> int:
        return self.latents.shape[0]

    @property
    def scored(self) -> bool:
        return not np.isnan(self.fitness).any()

    def specimen(self, i: int) -> Specimen:
        f = self.fitness[i]
        return Specimen(
            latent=self.latents[i].copy(),
            velocity=self.velocities[i].copy(),
            fitness=None if np.isnan(f) else float(f),
        )

    @property
    def population(self) -> tuple[Specimen, ...]:
        return tuple(self.specimen(i) for i in range(self.size))


def _ranking(fitness: np.ndarray) -> np.ndarray:
    """Indices by descending fitness; ties keep lower original index first."""
    return np.argsort(-fitness, kind="stable")


def _require_scored(fitness: np.ndarray, who: str):
    if np.isnan(fitness).any():
        raise ConfigError(f"{who} requires a fully scored population")


def check_compatible(cfg: EsConfig, gen: GeneratorContract, oracle: OracleContract):
    """Dimension compatibility across config, generator and oracle."""
    if gen.latent_dim != cfg.latent_dim:
        raise DimensionError(
            f"generator latent_dim {gen.latent_dim} does not match config latent_dim {cfg.latent_dim}"
        )
    if oracle.sample_dim != gen.sample_dim:
        raise DimensionError(
            f"oracle sample_dim {oracle.sample_dim} does not match generator sample_dim {gen.sample_dim}"
        )
    if not (0 <= cfg.target_class < oracle.num_classes):
        raise ConfigError(
            f"target_class {cfg.target_class} out of range for {oracle.num_classes} classes"
        )


def init_population(cfg: EsConfig, rng: np.random.Generator) -> EsState:
    """t specimens drawn componentwise uniform on [-u, u], zero velocity, unscored."""
    validate_config(cfg)
    lat = rng.uniform(-cfg.u, cfg.u, size=(cfg.t, cfg.latent_dim))
    return EsState(
        latents=lat,
        velocities=np.zeros_like(lat),
        fitness=np.full(cfg.t, np.nan),
        generation=0,
        model_calls=0,
    )


def evaluate_unscored(state: EsState, gen: GeneratorContract, oracle: OracleContract,
                      cfg: EsConfig) -> EsState:
    """Decode and score every unscored specimen in one batched call pair.

    Already-scored specimens keep their cached fitness and cost nothing.
    A fully scored state is returned unchanged (no model calls at all).
    """
    check_compatible(cfg, gen, oracle)
    mask = np.isnan(state.fitness)
    count = int(mask.sum())
    if count == 0:
        return state
    samples = gen.decode_batch(state.latents[mask])
    rows = oracle.predict_batch(samples)
    rows = np.asarray(rows, dtype=np.float64)
    if rows.shape != (count, oracle.num_classes):
        raise DimensionError(f"oracle returned shape {rows.shape}, expected {(count, oracle.num_classes)}")
    fitness = state.fitness.copy()
    # wire rows are validated to 1e-6; fold that slack back into [0, 1]
    fitness[mask] = np.clip(rows[:, cfg.target_class], 0.0, 1.0)
    return replace(state, fitness=fitness, model_calls=state.model_calls + count)


def select_elite(population: Sequence[Specimen], k: int) -> list[Specimen]:
    """The k fittest specimens, descending, ties broken by lower index."""
    if k < 1 or k > len(population):
        raise ConfigError(f"k must lie in [1, {len(population)}], got {k}")
    fitness = np.array(
        [np.nan if s.fitness is None else s.fitness for s in population], dtype=np.float64
    )
    _require_scored(fitness, "select_elite")
    order = _ranking(fitness)
    return [population[i] for i in order[:k]]


def mutate_specimen(spec: Specimen, cfg: EsConfig, rng: np.random.Generator) -> Specimen:
    """One momentum mutation of a scored specimen; the parent is untouched."""
    if not spec.scored:
        raise ConfigError("mutate_specimen requires a scored specimen")
    eps = rng.normal(0.0, cfg.s, size=(1, spec.latent.size))
    lat, vel = kernels.momentum_mutate(
        spec.latent.reshape(1, -1), spec.velocity.reshape(1, -1), eps, cfg.alpha, cfg.u
    )
    return Specimen(latent=lat[0], velocity=vel[0], fitness=None)


def es_step(state: EsState, gen: GeneratorContract, oracle: OracleContract,
            cfg: EsConfig, rng: np.random.Generator, mutation: str = "momentum") -> EsState:
    """Advance one generation: select, mutate, score.

    Offspring are created elite-index-outer, mutation-index-inner, from a
    single (k, m, d) Gaussian block, so the RNG stream consumption is
    reproducible.  The returned state is fully scored, with population
    k + k*m and model_calls grown by exactly k*m.
    """
    if mutation not in MUTATIONS:
        raise ConfigError(f"mutation must be one of {MUTATIONS}, got {mutation!r}")
    _require_scored(state.fitness, "es_step")
    if state.size < cfg.k:
        raise ConfigError(f"population of {state.size} cannot supply an elite of {cfg.k}")
    elite = _ranking(state.fitness)[: cfg.k]
    parents_lat = np.repeat(state.latents[elite], cfg.m, axis=0)
    noise = rng.normal(0.0, cfg.s, size=(cfg.k, cfg.m, cfg.latent_dim)).reshape(
        cfg.k * cfg.m, cfg.latent_dim
    )
    if mutation == "momentum":
        parents_vel = np.repeat(state.velocities[elite], cfg.m, axis=0)
        off_lat, off_vel = kernels.momentum_mutate(parents_lat, parents_vel, noise, cfg.alpha, cfg.u)
    else:
        off_lat = kernels.plain_mutate(parents_lat, noise, cfg.u)
        off_vel = np.zeros_like(off_lat)
    stepped = EsState(
        latents=np.concatenate([state.latents[elite], off_lat]),
        velocities=np.concatenate([state.velocities[elite], off_vel]),
        fitness=np.concatenate([state.fitness[elite], np.full(cfg.k * cfg.m, np.nan)]),
        generation=state.generation + 1,
        model_calls=state.model_calls,
        converged=state.converged,
    )
    return evaluate_unscored(stepped, gen, oracle, cfg)


def check_convergence(state: EsState, cfg: EsConfig, on: str = "elite") -> bool:
    """Elite criterion: every top-k specimen at or above the threshold.

    ``on="best"`` relaxes this to the single best specimen.
    """
    _require_scored(state.fitness, "check_convergence")
    if on == "best":
        return bool(state.fitness.max() >= cfg.threshold)
    if on != "elite":
        raise ConfigError(f"converge_on must be 'elite' or 'best', got {on!r}")
    k = min(cfg.k, state.size)
    elite = _ranking(state.fitness)[:k]
    return bool(state.fitness[elite].min() >= cfg.threshold)


def run_es(cfg: EsConfig, gen: GeneratorContract, oracle: OracleContract,
           rng: np.random.Generator, mutation: str = "momentum",
           converge_on: str = "elite") -> RunResult:
    """Full search: initialize, then step until converged or out of budget.

    Budget semantics: a generation may start whenever model_calls is still
    below max_calls, so the total can overshoot by at most one offspring
    batch.  Exhausting the budget is a normal non-converged outcome, not an
    error, but a budget below the initial population cost is rejected.
    """
    validate_config(cfg)
    check_compatible(cfg, gen, oracle)
    if cfg.max_calls < cfg.t:
        raise ConfigError(
            f"budget below initial population cost: max_calls={cfg.max_calls} < t={cfg.t}"
        )
    start = time.perf_counter()
    state = evaluate_unscored(init_population(cfg, rng), gen, oracle, cfg)
    converged = False
    while True:
        if check_convergence(state, cfg, on=converge_on):
            converged = True
            break
        if state.model_calls >= cfg.max_calls:
            break
        state = es_step(state, gen, oracle, cfg, rng, mutation=mutation)
    wall = time.perf_counter() - start
    state = replace(state, converged=converged)
    order = _ranking(state.fitness)
    return RunResult(
        converged=converged,
        model_calls=state.model_calls,
        generations=state.generation,
        wall_time=wall,
        best_specimen=state.specimen(int(order[0])),
        final_elite=tuple(state.specimen(int(i)) for i in order[: min(cfg.k, state.size)]),
    )
