"""Numeric kernel selection.

Imports the compiled extension when present, otherwise the pure numpy
implementation.  Set ``EXEMPLAR_PURE_KERNELS=1`` to force the pure path.
The choice is made once per process and reported in ``BACKEND``; child
plugin processes inherit the environment, so a run and its plugins always
use the same backend.
"""

import os

from . import pure

if os.environ.get("EXEMPLAR_PURE_KERNELS"):
    _impl = pure
    BACKEND = "pure"
else:
    try:
        from . import _fast as _impl

        BACKEND = "compiled"
    except ImportError:
        _impl = pure
        BACKEND = "pure"

centroid_probs = _impl.centroid_probs
dense = _impl.dense
tanh_rows = _impl.tanh_rows
softmax_rows = _impl.softmax_rows
momentum_mutate = _impl.momentum_mutate
plain_mutate = _impl.plain_mutate

__all__ = [
    "BACKEND",
    "centroid_probs",
    "dense",
    "tanh_rows",
    "softmax_rows",
    "momentum_mutate",
    "plain_mutate",
    "pure",
]
