"""Reference numpy implementation of the hot numeric kernels.

These four functions are the inner loop of every search and benchmark run:
batched centroid-softmax class probabilities, batched dense-layer forward
passes, and the two mutation rules.  ``exemplar.kernels`` re-exports either
this module or the compiled twin ``_fast``; both implement the same
contracts and agree to tight floating-point tolerance (see
``benchmarks/kernel_benchmark.py`` and ``tests/test_kernels.py``).

All inputs are C-contiguous float64 arrays; callers own that invariant.
"""

import numpy as np


def centroid_probs(samples, centroids, tau):
    """Class probabilities exp(-||x - mu_c||^2 / tau), row-normalized.

    Exponentials are taken raw, not max-shifted: squared distances are
    nonnegative so overflow is impossible, and graceful underflow to zero
    is part of the contract (far-away classes get exactly 0.0).  Rows where
    every class underflows are recomputed with a shifted exponent so they
    still normalize.
    """
    d2 = ((samples[:, None, :] - centroids[None, :, :]) ** 2).sum(axis=2)
    e = np.exp(-d2 / tau)
    s = e.sum(axis=1)
    dead = s == 0.0
    if np.any(dead):
        logits = -d2[dead] / tau
        shifted = np.exp(logits - logits.max(axis=1, keepdims=True))
        e[dead] = shifted
        s[dead] = shifted.sum(axis=1)
    return e / s[:, None]


def dense(x, weight, bias):
    """Affine layer: x @ weight.T + bias, weight laid out (out, in)."""
    return x @ weight.T + bias


def tanh_rows(a):
    return np.tanh(a)


def softmax_rows(a):
    """Row softmax, stabilized by max subtraction."""
    e = np.exp(a - a.max(axis=1, keepdims=True))
    return e / e.sum(axis=1, keepdims=True)


def momentum_mutate(latents, velocities, noise, alpha, bound):
    """Heavy-ball mutation: v' = alpha*v + eps, z' = clamp(z + v')."""
    new_vel = alpha * velocities + noise
    new_lat = np.clip(latents + new_vel, -bound, bound)
    return new_lat, new_vel


def plain_mutate(latents, noise, bound):
    """Memoryless Gaussian mutation: z' = clamp(z + eps)."""
    return np.clip(latents + noise, -bound, bound)
