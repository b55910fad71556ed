"""Shipped plugin children, runnable as ``python -m exemplar.plugins NAME``.

Well-behaved plugins:

* ``echo-oracle [--dim D]``        - softmax of the raw sample (D classes);
                                     deterministic and order-sensitive, for
                                     protocol conformance checks.
* ``echo-generator [--dim D]``     - identity decoder.
* ``fixture-oracle --fixture N``   - serve the named fixture's classifier.
* ``fixture-generator --fixture N``- serve the named fixture's decoder.

Deliberately broken plugins, kept for testing the parent's validation:

* ``bad-rowcount-oracle``   - drops the last row of every reply.
* ``bad-sum-oracle``        - scales rows by 1.2 (normalization violated).
* ``flaky-oracle``          - mixes a request counter into its rows
                              (determinism violated).
* ``crash-oracle``          - exits mid-request without replying.
* ``hang-oracle``           - never replies to predict (timeout exercise).
* ``wrong-role-oracle``     - handshakes as a generator.
"""

from __future__ import annotations

import argparse
import json
import sys
import time

import numpy as np

from .fixtures import get_fixture
from .generators import IdentityDecoder
from .kernels import softmax_rows
from .plugin import PROTOCOL_VERSION, serve_generator, serve_oracle

__all__ = ["main", "PLUGIN_NAMES"]


class _EchoOracle:
    """num_classes == sample_dim; rows are softmax(sample)."""

    def __init__(self, dim: int):
        self.num_classes = dim
        self.sample_dim = dim

    def predict_batch(self, samples):
        return softmax_rows(np.ascontiguousarray(samples, dtype=np.float64))


def _emit(obj):
    sys.stdout.write(json.dumps(obj) + "\n")
    sys.stdout.flush()


def _misbehaving_loop(mode: str, dim: int):
    """Hand-rolled protocol loop for the deliberately broken plugins."""
    model = _EchoOracle(dim)
    role = "generator" if mode == "wrong-role" else "oracle"
    hello = {"type": "hello", "role": role, "num_classes": dim, "sample_dim": dim}
    if mode == "wrong-role":
        hello = {"type": "hello", "role": "generator", "latent_dim": dim, "sample_dim": dim}
    count = 0
    for line in sys.stdin:
        line = line.strip()
        if not line:
            continue
        msg = json.loads(line)
        if msg.get("type") == "hello":
            if msg.get("protocol") != PROTOCOL_VERSION:
                _emit({"type": "error", "message": "unsupported protocol"})
            else:
                _emit(hello)
            continue
        if msg.get("type") != "predict":
            _emit({"type": "error", "message": f"unsupported request type {msg.get('type')!r}"})
            continue
        samples = np.array(msg["samples"], dtype=np.float64).reshape(-1, dim)
        rows = model.predict_batch(samples)
        count += 1
        if mode == "bad-rowcount":
            _emit({"type": "probs", "rows": rows[:-1].tolist()})
        elif mode == "bad-sum":
            _emit({"type": "probs", "rows": (rows * 1.2).tolist()})
        elif mode == "flaky":
            noisy = rows + 1e-3 * count
            noisy /= noisy.sum(axis=1, keepdims=True)
            _emit({"type": "probs", "rows": noisy.tolist()})
        elif mode == "crash":
            sys.exit(3)
        elif mode == "hang":
            time.sleep(3600)
        else:
            _emit({"type": "probs", "rows": rows.tolist()})


PLUGIN_NAMES = (
    "echo-oracle",
    "echo-generator",
    "fixture-oracle",
    "fixture-generator",
    "bad-rowcount-oracle",
    "bad-sum-oracle",
    "flaky-oracle",
    "crash-oracle",
    "hang-oracle",
    "wrong-role-oracle",
)


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="python -m exemplar.plugins",
                                     description="shipped plugin children")
    parser.add_argument("name", choices=PLUGIN_NAMES)
    parser.add_argument("--dim", type=int, default=4)
    parser.add_argument("--fixture", default=None)
    args = parser.parse_args(argv)

    if args.name == "echo-oracle":
        serve_oracle(_EchoOracle(args.dim))
    elif args.name == "echo-generator":
        serve_generator(IdentityDecoder(args.dim))
    elif args.name in ("fixture-oracle", "fixture-generator"):
        if not args.fixture:
            parser.error(f"{args.name} requires --fixture")
        gen, oracle = get_fixture(args.fixture).build()
        if args.name == "fixture-oracle":
            serve_oracle(oracle)
        else:
            serve_generator(gen)
    else:
        _misbehaving_loop(args.name.removesuffix("-oracle"), args.dim)
    return 0


if __name__ == "__main__":
    sys.exit(main())
