"""Command-line front end.

Subcommands: ``run`` (search per config), ``gd`` (force the gradient
baseline), ``bench`` (trial statistics), ``sweep`` (hyperparameter grid),
``gradcheck`` (analytic vs finite-difference gradients), ``plugin-test``
(wire-protocol conformance).

Exit codes are a stable contract: 0 success (or converged), 2 completed
without converging, 1 any error.
"""

from __future__ import annotations

import argparse
import dataclasses
import sys

import numpy as np

from .bench import METHODS, SweepSpec, render_report, run_trials, run_sweep, write_report
from .configio import RunSpec, apply_overrides, load_run_spec
from .core import RunResult, rng_streams, validate_config
from .errors import ConfigError, ExemplarError, PluginError, ProtocolError
from .es import run_es
from .fixtures import PluginFixture, get_fixture
from .gd import DifferentiableComposite, finite_diff_gradient, run_gd
from .plugin import SubprocessGenerator, SubprocessOracle

__all__ = ["main"]

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_NOT_CONVERGED = 2


class _Parser(argparse.ArgumentParser):
    """argparse exits 2 on bad usage; our error contract says 1."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_ERROR, f"{self.prog}: error: {message}\n")


def _build_parser() -> _Parser:
    parser = _Parser(prog="exemplar",
                     description="Latent-space exemplar synthesis and benchmarks.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(p, config_required=True):
        p.add_argument("--config", required=config_required, help="config file path")
        p.add_argument("--seed", type=int, default=0, help="master seed (default 0)")
        p.add_argument("--out", default=None, help="output file path")
        p.add_argument("--set", dest="overrides", action="append", default=[],
                       metavar="KEY=VALUE", help="override a config field (repeatable)")
        p.add_argument("--oracle-cmd", default=None, help="plugin command serving the classifier")
        p.add_argument("--generator-cmd", default=None, help="plugin command serving the decoder")

    p_run = sub.add_parser("run", help="run the configured search method")
    common(p_run)
    p_run.add_argument("--max-calls", type=int, default=None, help="model call budget override")
    p_run.add_argument("--converge-on", choices=("best", "elite"), default=None,
                       help="convergence criterion (default: config, else elite)")

    p_gd = sub.add_parser("gd", help="run the gradient-ascent baseline")
    common(p_gd)
    p_gd.add_argument("--max-calls", type=int, default=None, help="model call budget override")

    p_bench = sub.add_parser("bench", help="aggregate statistics over seeded trials")
    common(p_bench)
    p_bench.add_argument("--trials", type=int, required=True, help="number of trials")
    p_bench.add_argument("--workers", type=int, default=1, help="parallel worker processes")
    p_bench.add_argument("--method", choices=METHODS + ("all",), default=None,
                         help="method to benchmark (default: config method)")
    p_bench.add_argument("--format", choices=("csv", "text"), default="csv")

    p_sweep = sub.add_parser("sweep", help="one-axis-at-a-time hyperparameter sweep")
    common(p_sweep)
    p_sweep.add_argument("--trials", type=int, required=True)
    p_sweep.add_argument("--workers", type=int, default=1)
    p_sweep.add_argument("--format", choices=("csv", "text"), default="csv")

    p_grad = sub.add_parser("gradcheck", help="analytic vs central-difference gradients")
    common(p_grad)
    p_grad.add_argument("--count", type=int, default=20, help="number of probe points")
    p_grad.add_argument("--step", type=float, default=1e-5, help="finite-difference step")
    p_grad.add_argument("--tol", type=float, default=1e-5, help="max relative error accepted")
    p_grad.add_argument("--range", type=float, default=2.0, dest="probe_range",
                        help="probe latents drawn uniform in [-range, range]")

    p_plug = sub.add_parser("plugin-test", help="wire-protocol conformance checks")
    p_plug.add_argument("--oracle-cmd", default=None)
    p_plug.add_argument("--generator-cmd", default=None)
    p_plug.add_argument("--batch", type=int, default=5, help="probe batch size")
    p_plug.add_argument("--seed", type=int, default=0)
    return parser


# --------------------------------------------------------------------------
# Fixture / config resolution
# --------------------------------------------------------------------------


def _load_spec(args) -> RunSpec:
    spec = load_run_spec(args.config, args.overrides)
    cli_sets = []
    if args.oracle_cmd:
        cli_sets.append(f"oracle_cmd={args.oracle_cmd}")
    if args.generator_cmd:
        cli_sets.append(f"generator_cmd={args.generator_cmd}")
    if getattr(args, "max_calls", None) is not None:
        cli_sets.append(f"max_calls={args.max_calls}")
    if getattr(args, "converge_on", None):
        cli_sets.append(f"converge_on={args.converge_on}")
    return apply_overrides(spec, cli_sets)


def _resolve_parts(spec: RunSpec):
    """Build live (fixture, generator, oracle) from a run spec."""
    if spec.oracle_cmd or spec.generator_cmd:
        base_gen = base_oracle = None
        if spec.fixture:
            base_gen, base_oracle = get_fixture(spec.fixture).build()
        elif not (spec.oracle_cmd and spec.generator_cmd):
            raise ConfigError("a single plugin command needs a fixture for the other side")
        gen = SubprocessGenerator(spec.generator_cmd) if spec.generator_cmd else base_gen
        oracle = SubprocessOracle(spec.oracle_cmd) if spec.oracle_cmd else base_oracle
        target = spec.es.target_class if "target_class" in spec.explicit else (
            get_fixture(spec.fixture).target_class if spec.fixture else 0)
        fixture = PluginFixture(latent_dim=gen.latent_dim, target_class=target,
                                oracle_cmd=spec.oracle_cmd, generator_cmd=spec.generator_cmd,
                                base=spec.fixture)
        return fixture, gen, oracle
    if not spec.fixture:
        raise ConfigError("config must name a fixture or give plugin commands")
    fixture = get_fixture(spec.fixture)
    gen, oracle = fixture.build()
    return fixture, gen, oracle


def _close_parts(*parts):
    for part in parts:
        close = getattr(part, "close", None)
        if close is not None:
            close()


def _final_config(spec: RunSpec, fixture, gen, kind: str):
    cfg = spec.es if kind == "es" else spec.gd
    if "latent_dim" in spec.explicit and cfg.latent_dim != gen.latent_dim:
        raise ConfigError(
            f"config latent_dim {cfg.latent_dim} does not match the generator's {gen.latent_dim}"
        )
    cfg = dataclasses.replace(cfg, latent_dim=gen.latent_dim)
    if "target_class" not in spec.explicit:
        cfg = dataclasses.replace(cfg, target_class=fixture.target_class)
    return validate_config(cfg)


# --------------------------------------------------------------------------
# Result rendering
# --------------------------------------------------------------------------


def _vector_text(vec) -> str:
    return " ".join(repr(float(v)) for v in vec)


def format_run_result(result: RunResult, best_sample) -> str:
    """Structured key-value text; wall_time is the only nondeterministic line."""
    best = result.best_specimen
    lines = [
        f"converged {'true' if result.converged else 'false'}",
        f"model_calls {result.model_calls}",
        f"generations {result.generations}",
        f"wall_time {result.wall_time:.6f}",
        f"best_fitness {best.fitness!r}",
        f"best_latent {_vector_text(best.latent)}",
        f"best_sample {_vector_text(best_sample)}",
        f"elite_fitness {' '.join(repr(s.fitness) for s in result.final_elite)}",
    ]
    return "\n".join(lines) + "\n"


def _emit_result(args, result: RunResult, gen) -> int:
    best_sample = np.asarray(gen.decode_batch(result.best_specimen.latent.reshape(1, -1)))[0]
    text = format_run_result(result, best_sample)
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(text)
    sys.stdout.write(text)
    return EXIT_OK if result.converged else EXIT_NOT_CONVERGED


# --------------------------------------------------------------------------
# Commands
# --------------------------------------------------------------------------


def _cmd_run(args) -> int:
    spec = _load_spec(args)
    fixture, gen, oracle = _resolve_parts(spec)
    try:
        if spec.method == "gd":
            return _run_gd_parts(args, spec, fixture, gen, oracle)
        cfg = _final_config(spec, fixture, gen, "es")
        rng = rng_streams(args.seed, 0)
        result = run_es(cfg, gen, oracle, rng,
                        mutation="plain" if spec.method == "es-plain" else "momentum",
                        converge_on=spec.converge_on)
        return _emit_result(args, result, gen)
    finally:
        _close_parts(gen, oracle)


def _run_gd_parts(args, spec, fixture, gen, oracle) -> int:
    cfg = _final_config(spec, fixture, gen, "gd")
    model = DifferentiableComposite(gen, oracle)
    result = run_gd(cfg, model, rng=rng_streams(args.seed, 0))
    return _emit_result(args, result, gen)


def _cmd_gd(args) -> int:
    spec = _load_spec(args)
    fixture, gen, oracle = _resolve_parts(spec)
    try:
        return _run_gd_parts(args, spec, fixture, gen, oracle)
    finally:
        _close_parts(gen, oracle)


def _cmd_bench(args) -> int:
    spec = _load_spec(args)
    fixture, gen, oracle = _resolve_parts(spec)
    try:
        methods = [args.method or spec.method]
        if methods == ["all"]:
            methods = ["gd", "es-plain", "es"]
        rows = []
        for method in methods:
            cfg = _final_config(spec, fixture, gen, "gd" if method == "gd" else "es")
            rows.append(run_trials(method, cfg, fixture, args.trials, args.seed,
                                   workers=args.workers))
    finally:
        _close_parts(gen, oracle)
    if args.out:
        write_report(rows, args.out, fmt=args.format)
    sys.stdout.write(render_report(rows, fmt="text"))
    return EXIT_OK


def _cmd_sweep(args) -> int:
    spec = _load_spec(args)
    if not spec.sweep:
        raise ConfigError("config has no [sweep] section")
    if spec.method == "gd":
        raise ConfigError("sweeps cover the evolutionary methods, not gd")
    fixture, gen, oracle = _resolve_parts(spec)
    try:
        base = _final_config(spec, fixture, gen, "es")
        sweep = SweepSpec(base=base, axes=spec.sweep, method=spec.method)
        rows = run_sweep(sweep, fixture, args.trials, args.seed, workers=args.workers)
    finally:
        _close_parts(gen, oracle)
    if args.out:
        write_report(rows, args.out, fmt=args.format)
    sys.stdout.write(render_report(rows, fmt="text"))
    return EXIT_OK


def _cmd_gradcheck(args) -> int:
    spec = _load_spec(args)
    fixture, gen, oracle = _resolve_parts(spec)
    try:
        model = DifferentiableComposite(gen, oracle)
        cfg = _final_config(spec, fixture, gen, "gd")
        worst = 0.0
        for i in range(args.count):
            rng = rng_streams(args.seed, i)
            z = rng.uniform(-args.probe_range, args.probe_range, size=cfg.latent_dim)
            _, analytic = model.value_and_gradient(z, cfg.target_class)
            numeric = finite_diff_gradient(
                lambda zz: model.value_and_gradient(zz, cfg.target_class)[0], z, args.step)
            denom = max(np.linalg.norm(analytic), np.linalg.norm(numeric), 1e-12)
            worst = max(worst, float(np.linalg.norm(analytic - numeric) / denom))
        ok = worst <= args.tol
        print(f"{'ok' if ok else 'FAIL'}: max relative gradient error {worst:.3e} "
              f"over {args.count} probes (tol {args.tol:.1e})")
        return EXIT_OK if ok else EXIT_ERROR
    finally:
        _close_parts(gen, oracle)


def _probe_batch(rng, n, dim):
    return rng.normal(0.0, 1.0, size=(n, dim))


def _cmd_plugin_test(args) -> int:
    if not args.oracle_cmd and not args.generator_cmd:
        raise ConfigError("plugin-test needs --oracle-cmd and/or --generator-cmd")
    failures = []

    def check(clause, fn):
        try:
            fn()
        except (PluginError, ProtocolError, ExemplarError) as exc:
            failures.append(clause)
            print(f"FAIL {clause}: {exc}")
        else:
            print(f"ok {clause}")

    rng = rng_streams(args.seed, 0)
    if args.oracle_cmd:
        with SubprocessOracle(args.oracle_cmd) as oracle:
            print(f"oracle handshake: num_classes={oracle.num_classes} "
                  f"sample_dim={oracle.sample_dim}")
            batch = _probe_batch(rng, args.batch, oracle.sample_dim)
            first = {}
            check("oracle batch shape and normalization",
                  lambda: first.setdefault("rows", oracle.predict_batch(batch)))

            def determinism():
                again = oracle.predict_batch(batch)
                if "rows" in first and not np.array_equal(first["rows"], again):
                    raise ProtocolError("determinism violated: repeated identical "
                                        "request returned different rows")

            check("oracle determinism", determinism)
    if args.generator_cmd:
        with SubprocessGenerator(args.generator_cmd) as gen:
            print(f"generator handshake: latent_dim={gen.latent_dim} "
                  f"sample_dim={gen.sample_dim}")
            batch = _probe_batch(rng, args.batch, gen.latent_dim)
            first = {}
            check("generator batch shape",
                  lambda: first.setdefault("rows", gen.decode_batch(batch)))

            def determinism():
                again = gen.decode_batch(batch)
                if "rows" in first and not np.array_equal(first["rows"], again):
                    raise ProtocolError("determinism violated: repeated identical "
                                        "request returned different rows")

            check("generator determinism", determinism)
    return EXIT_ERROR if failures else EXIT_OK


_COMMANDS = {
    "run": _cmd_run,
    "gd": _cmd_gd,
    "bench": _cmd_bench,
    "sweep": _cmd_sweep,
    "gradcheck": _cmd_gradcheck,
    "plugin-test": _cmd_plugin_test,
}


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except ExemplarError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
