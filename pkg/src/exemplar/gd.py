"""Glass-box baseline: gradient ascent with momentum through decoder and classifier.

Requires analytic gradients, so it only accepts the in-process toy models
(identity/affine/tanh-MLP decoders; centroid-softmax or tanh-MLP
classifiers).  Gradients are hand-derived chain-rule products; a central
finite-difference checker provides the independent verification route and
must never be replaced by the analytic path.

One model call is one value-and-gradient evaluation (forward and backward
together), so call counts are comparable with the evolutionary search's
per-sample accounting.
"""

from __future__ import annotations

import time

import numpy as np

from .core import GdConfig, RunResult, Specimen, as_latent, clamp_latent, validate_config
from .errors import CapabilityError, ConfigError
from .generators import AffineDecoder, IdentityDecoder, MlpDecoder
from .oracles import CentroidSoftmaxModel, ToyMlpModel

__all__ = [
    "DifferentiableComposite",
    "composite_gradient",
    "finite_diff_gradient",
    "run_gd",
]


def _centroid_value_grad(model: CentroidSoftmaxModel, x: np.ndarray, target: int):
    """p_target and its gradient in sample space.

    grad p_t = (2 p_t / tau) * (mu_t - sum_j p_j mu_j); the p_t prefactor
    makes the gradient exactly zero wherever the target's exponential has
    underflowed.
    """
    probs = model.predict_batch(x.reshape(1, -1))[0]
    p_t = float(probs[target])
    barycenter = probs @ model.centroids
    grad = (2.0 * p_t / model.tau) * (model.centroids[target] - barycenter)
    return p_t, grad


def _mlp_forward_trace(layers, x: np.ndarray):
    """Activations per layer input: [x, tanh-out of layer 0, ...]."""
    hs = [x]
    for w, b in layers[:-1]:
        hs.append(np.tanh(hs[-1] @ w.T + b))
    return hs


def _backprop_inputs(layers, hs, delta: np.ndarray) -> np.ndarray:
    """Push a gradient at the last layer's pre-activation back to the input."""
    for l in range(len(layers) - 1, -1, -1):
        w, _ = layers[l]
        delta = delta @ w
        if l > 0:
            delta = delta * (1.0 - hs[l] ** 2)
    return delta


def _mlp_value_grad(model: ToyMlpModel, x: np.ndarray, target: int):
    """p_target and its gradient for the tanh/softmax classifier."""
    probs = model.predict_batch(x.reshape(1, -1))[0]
    p_t = float(probs[target])
    hs = _mlp_forward_trace(model.layers, x)
    # d p_t / d logits = p_t * (onehot_t - p)
    delta = p_t * (np.eye(model.num_classes)[target] - probs)
    return p_t, _backprop_inputs(model.layers, hs, delta)


_ORACLE_GRADS = {
    CentroidSoftmaxModel: _centroid_value_grad,
    ToyMlpModel: _mlp_value_grad,
}


def _decoder_vjp(gen, z: np.ndarray):
    """Decode one latent and return (sample, pullback of sample-space gradients)."""
    if isinstance(gen, IdentityDecoder):
        return z, lambda g: g
    if isinstance(gen, AffineDecoder):
        x = gen.decode_batch(z.reshape(1, -1))[0]
        return x, lambda g: g @ gen.weight
    if isinstance(gen, MlpDecoder):
        x = gen.decode_batch(z.reshape(1, -1))[0]
        hs = _mlp_forward_trace(gen.layers, z)

        def pull(g):
            return _backprop_inputs(gen.layers, hs, g * (1.0 - x**2))

        return x, pull
    raise CapabilityError(f"{type(gen).__name__} does not expose analytic gradients")


class DifferentiableComposite:
    """fitness(z) = p_target(decode(z)) with its exact latent-space gradient.

    The forward value reuses the same prediction code the black-box path
    runs, so the fitness here equals the composite oracle fitness exactly.
    """

    def __init__(self, gen, oracle):
        oracle_grad = _ORACLE_GRADS.get(type(oracle))
        if oracle_grad is None:
            raise CapabilityError(f"{type(oracle).__name__} does not expose analytic gradients")
        if gen.sample_dim != oracle.sample_dim:
            raise ConfigError(
                f"oracle sample_dim {oracle.sample_dim} does not match generator sample_dim {gen.sample_dim}"
            )
        _decoder_vjp(gen, np.zeros(gen.latent_dim))  # capability check up front
        self.gen = gen
        self.oracle = oracle
        self._oracle_grad = oracle_grad
        self.latent_dim = gen.latent_dim
        self.num_classes = oracle.num_classes

    def value_and_gradient(self, z, target: int):
        z = as_latent(z)
        if z.size != self.latent_dim:
            raise ConfigError(f"latent length {z.size} does not match model latent_dim {self.latent_dim}")
        if not (0 <= target < self.num_classes):
            raise ConfigError(f"target_class {target} out of range for {self.num_classes} classes")
        x, pull = _decoder_vjp(self.gen, z)
        value, grad_x = self._oracle_grad(self.oracle, x, target)
        return value, pull(grad_x)


def composite_gradient(gen, oracle, z, target: int):
    """One-shot (fitness, gradient) for a differentiable decoder/classifier pair."""
    return DifferentiableComposite(gen, oracle).value_and_gradient(z, target)


def finite_diff_gradient(f, z, h: float) -> np.ndarray:
    """Central differences per coordinate: (f(z + h e_i) - f(z - h e_i)) / 2h."""
    if not h > 0:
        raise ConfigError(f"h must be > 0, got {h}")
    z = as_latent(z)
    grad = np.empty_like(z)
    for i in range(z.size):
        zp = z.copy()
        zm = z.copy()
        zp[i] += h
        zm[i] -= h
        grad[i] = (f(zp) - f(zm)) / (2.0 * h)
    return grad


def run_gd(cfg: GdConfig, model: DifferentiableComposite, z0=None,
           rng: np.random.Generator | None = None) -> RunResult:
    """Momentum ascent from z0 (or a uniform random start drawn from rng).

    Per iteration: evaluate (one model call), stop if at threshold, else
        v' = momentum * v + learning_rate * grad
        z' = clamp(z + v')
    The reported best is the maximum over the whole trajectory.
    """
    validate_config(cfg)
    if model.latent_dim != cfg.latent_dim:
        raise ConfigError(
            f"model latent_dim {model.latent_dim} does not match config latent_dim {cfg.latent_dim}"
        )
    if not (0 <= cfg.target_class < model.num_classes):
        raise ConfigError(
            f"target_class {cfg.target_class} out of range for {model.num_classes} classes"
        )
    if z0 is None:
        if rng is None:
            raise ConfigError("run_gd needs either an explicit start z0 or an rng to draw one")
        z = rng.uniform(-cfg.u, cfg.u, size=cfg.latent_dim)
    else:
        z = clamp_latent(as_latent(z0), cfg.u)
        if z.size != cfg.latent_dim:
            raise ConfigError(f"z0 length {z.size} does not match latent_dim {cfg.latent_dim}")
    start = time.perf_counter()
    v = np.zeros_like(z)
    best_f = -1.0
    best_z = z
    best_v = v
    calls = 0
    converged = False
    while True:
        f, grad = model.value_and_gradient(z, cfg.target_class)
        calls += 1
        if f > best_f:
            best_f, best_z, best_v = f, z, v
        if f >= cfg.threshold:
            converged = True
            break
        if calls >= cfg.max_calls:
            break
        v = cfg.momentum * v + cfg.learning_rate * grad
        z = clamp_latent(z + v, cfg.u)
    wall = time.perf_counter() - start
    best = Specimen(latent=best_z, velocity=best_v, fitness=min(max(best_f, 0.0), 1.0))
    return RunResult(
        converged=converged,
        model_calls=calls,
        generations=calls,
        wall_time=wall,
        best_specimen=best,
        final_elite=(best,),
    )
