"""Trial runner and statistics aggregator for convergence studies.

Runs n independent trials of a method on a fixture, each with its own
counter-derived random stream, and aggregates converged counts, mean model
calls and mean wall time.  Averages over calls are reported both over all
trials and over converged trials only (budget-capped runs would otherwise
blur the two).  Wall times are reported but carry no guarantees; call
counts are the hardware-independent cost metric.

Trials can run in a process pool; each worker rebuilds the fixture (and
thus owns any plugin child processes) and results are reduced in trial
order, so the statistics are identical however many workers run.
"""

from __future__ import annotations

import csv
import dataclasses
import io
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Optional, Sequence, Union

import numpy as np

from .core import EsConfig, GdConfig, rng_streams, validate_config
from .errors import BenchError, ConfigError
from .es import run_es
from .gd import DifferentiableComposite, run_gd

__all__ = [
    "METHODS",
    "SWEEP_PARAMS",
    "TrialRecord",
    "BenchStats",
    "SweepSpec",
    "SweepRow",
    "run_trials",
    "run_sweep",
    "write_report",
    "render_report",
]

METHODS = ("es", "es-plain", "gd")
SWEEP_PARAMS = ("t", "k", "alpha", "m", "s")


@dataclass(frozen=True)
class TrialRecord:
    trial: int
    converged: bool
    calls: int
    time: float


@dataclass(frozen=True)
class BenchStats:
    """Aggregated trial statistics; aggregates recompute exactly from records."""

    method: str
    config: Union[EsConfig, GdConfig]
    master_seed: int
    trials: int
    converged_count: int
    avg_calls: float
    avg_calls_converged: float  # nan when no trial converged
    avg_time: float
    records: tuple

    @classmethod
    def from_records(cls, method: str, config, master_seed: int,
                     records: Sequence[TrialRecord]) -> "BenchStats":
        if not records:
            raise BenchError("cannot aggregate zero trials")
        calls = np.array([r.calls for r in records], dtype=np.float64)
        conv = np.array([r.converged for r in records], dtype=bool)
        times = np.array([r.time for r in records], dtype=np.float64)
        return cls(
            method=method,
            config=config,
            master_seed=master_seed,
            trials=len(records),
            converged_count=int(conv.sum()),
            avg_calls=float(calls.mean()),
            avg_calls_converged=float(calls[conv].mean()) if conv.any() else float("nan"),
            avg_time=float(times.mean()),
            records=tuple(records),
        )


def _run_one(method: str, cfg, fixture_parts, trial: int, master_seed: int) -> TrialRecord:
    rng = rng_streams(master_seed, trial)
    if method == "gd":
        result = run_gd(cfg, fixture_parts, rng=rng)
    else:
        gen, oracle = fixture_parts
        result = run_es(cfg, gen, oracle, rng, mutation="plain" if method == "es-plain" else "momentum")
    return TrialRecord(trial=trial, converged=result.converged,
                       calls=result.model_calls, time=result.wall_time)


def _build_parts(method: str, fixture):
    gen, oracle = fixture.build()
    if method == "gd":
        return DifferentiableComposite(gen, oracle)
    return gen, oracle


_worker_state: dict = {}


def _worker_init(method, cfg, fixture, master_seed):
    _worker_state["args"] = (method, cfg, _build_parts(method, fixture), master_seed)


def _worker_run(trial: int) -> TrialRecord:
    method, cfg, parts, master_seed = _worker_state["args"]
    return _run_one(method, cfg, parts, trial, master_seed)


def _check_method_config(method: str, cfg):
    if method not in METHODS:
        raise ConfigError(f"method must be one of {METHODS}, got {method!r}")
    want = GdConfig if method == "gd" else EsConfig
    if not isinstance(cfg, want):
        raise ConfigError(f"method {method!r} needs a {want.__name__}, got {type(cfg).__name__}")
    validate_config(cfg)
    if isinstance(cfg, EsConfig) and cfg.max_calls < cfg.t:
        raise ConfigError(
            f"budget below initial population cost: max_calls={cfg.max_calls} < t={cfg.t}"
        )


def run_trials(method: str, cfg, fixture, n: int, master_seed: int,
               workers: int = 1) -> BenchStats:
    """n independent runs; trial i uses the stream rng_streams(master_seed, i).

    A per-trial error aborts the batch with a BenchError whose ``partial``
    attribute holds the statistics of the trials finished before it.
    """
    _check_method_config(method, cfg)
    if n < 1:
        raise ConfigError(f"trial count must be >= 1, got {n}")
    records: list[TrialRecord] = []
    try:
        if workers <= 1:
            parts = _build_parts(method, fixture)
            for i in range(n):
                records.append(_run_one(method, cfg, parts, i, master_seed))
        else:
            with ProcessPoolExecutor(
                max_workers=workers, initializer=_worker_init,
                initargs=(method, cfg, fixture, master_seed),
            ) as pool:
                for record in pool.map(_worker_run, range(n)):
                    records.append(record)
    except Exception as exc:
        partial = (BenchStats.from_records(method, cfg, master_seed, records)
                   if records else None)
        raise BenchError(f"trial {len(records)} failed: {exc}", partial=partial) from exc
    return BenchStats.from_records(method, cfg, master_seed, records)


@dataclass(frozen=True)
class SweepSpec:
    """One-axis-at-a-time grid around a base configuration."""

    base: EsConfig
    axes: tuple  # ((param, (values...)), ...) in declaration order
    method: str = "es"

    def __post_init__(self):
        validate_config(self.base)
        axes = tuple((param, tuple(values)) for param, values in self.axes)
        for param, values in axes:
            if param not in SWEEP_PARAMS:
                raise ConfigError(f"sweep parameter must be one of {SWEEP_PARAMS}, got {param!r}")
            if not values:
                raise ConfigError(f"sweep axis {param!r} has no values")
            for value in values:
                validate_config(dataclasses.replace(self.base, **{param: value}))
        object.__setattr__(self, "axes", axes)

    def rows(self):
        for param, values in self.axes:
            for value in values:
                yield param, value, dataclasses.replace(self.base, **{param: value})


@dataclass(frozen=True)
class SweepRow:
    param: str
    value: object
    stats: BenchStats


def run_sweep(spec: SweepSpec, fixture, n: int, master_seed: int,
              workers: int = 1) -> list[SweepRow]:
    """Run every grid point with the same master seed; rows in declaration order."""
    out = []
    for param, value, cfg in spec.rows():
        stats = run_trials(spec.method, cfg, fixture, n, master_seed, workers=workers)
        out.append(SweepRow(param=param, value=value, stats=stats))
    return out


# --------------------------------------------------------------------------
# Reports
# --------------------------------------------------------------------------

_COLUMNS = ("method", "t", "k", "alpha", "m", "s", "trials", "converged",
            "avg_calls", "avg_calls_converged", "avg_time")


def _stat_row(stats: BenchStats) -> list[str]:
    cfg = stats.config
    es = isinstance(cfg, EsConfig)
    fmt = lambda v: format(v, "g")
    return [
        stats.method,
        fmt(cfg.t) if es else "-",
        fmt(cfg.k) if es else "-",
        fmt(cfg.alpha) if es else "-",
        fmt(cfg.m) if es else "-",
        fmt(cfg.s) if es else "-",
        str(stats.trials),
        str(stats.converged_count),
        f"{stats.avg_calls:.1f}",
        "-" if np.isnan(stats.avg_calls_converged) else f"{stats.avg_calls_converged:.1f}",
        f"{stats.avg_time:.2f}",
    ]


def _normalize(stats) -> list[BenchStats]:
    if isinstance(stats, BenchStats):
        return [stats]
    out = []
    for item in stats:
        out.append(item.stats if isinstance(item, SweepRow) else item)
    if not out:
        raise ConfigError("cannot write an empty report")
    return out


def render_report(stats, fmt: str = "csv") -> str:
    """Deterministic tabular report; calls to 1 decimal, times to 2."""
    rows = [_stat_row(s) for s in _normalize(stats)]
    if fmt == "csv":
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(_COLUMNS)
        writer.writerows(rows)
        return buf.getvalue()
    if fmt == "text":
        table = [list(_COLUMNS)] + rows
        widths = [max(len(r[i]) for r in table) for i in range(len(_COLUMNS))]
        lines = ["  ".join(cell.ljust(w) for cell, w in zip(row, widths)).rstrip()
                 for row in table]
        return "\n".join(lines) + "\n"
    raise ConfigError(f"report format must be 'csv' or 'text', got {fmt!r}")


def write_report(stats, path, fmt: str = "csv"):
    """Render and write; two invocations on equal stats are byte-identical."""
    text = render_report(stats, fmt)
    try:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(text)
    except OSError as exc:
        raise ConfigError(f"cannot write report to {path}: {exc}") from exc
    return path
