"""Central finite-difference check of every trainable parameter."""
from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np

from ..errors import NumericError
from .model import ModelConfig, loss_and_backward, xavier_init

REDUCED = dict(blocks=1, convs_per_block=2, initial_filters=8, height=8, width=12, num_classes=3,
               input_channels=3, dropout_p=0.5)


@dataclass
class GradCheckResult:
    max_rel_error: float
    per_tensor: dict[str, float]
    seconds: float
    checked: int
    redraws: int = 0
    max_elementwise: float = 0.0

    def passed(self, tol: float = 1e-4) -> bool:
        """Both the per-tensor and the worst single-element error are below ``tol``."""
        return self.max_rel_error < tol and self.max_elementwise < tol


def relative_error(analytic: np.ndarray, numeric: np.ndarray) -> float:
    """``||a - n|| / max(||a||, ||n||)`` over one parameter tensor."""
    scale = max(np.linalg.norm(analytic), np.linalg.norm(numeric))
    return float(np.linalg.norm(analytic - numeric) / scale) if scale > 0 else 0.0


class _KinkCrossed(Exception):
    pass


def _masks(cache):
    return [layer[3] for layer in cache["layers"]]


def _probe(config: ModelConfig, batch: int, seed: int):
    rng = np.random.default_rng(seed)
    x = rng.normal(size=(batch, config.input_channels, config.height, config.width))
    y = rng.integers(0, config.num_classes, size=batch)
    params = xavier_init(config, seed=seed, dtype=np.float64)
    # non-trivial BN affine parameters and dense bias
    for name, w in params.weights.items():
        if name.endswith(".gamma"):
            w[...] = rng.uniform(0.5, 1.5, size=w.shape)
        elif name.endswith((".beta", ".b")):
            w[...] = rng.normal(scale=0.3, size=w.shape)
    return x, y, params


def _check_at(config, x, y, params, eps, dropout_seed):
    def run():
        return loss_and_backward(params, config, x, y, "train", np.random.default_rng(dropout_seed))

    _, grads, cache = run()
    base = _masks(cache)
    per_tensor, elementwise, checked = {}, 0.0, 0
    for name, w in params.weights.items():
        numeric = np.zeros(w.size)
        flat = w.reshape(-1)
        for i in range(flat.size):
            orig = flat[i]
            values = []
            for delta in (eps, -eps):
                flat[i] = orig + delta
                loss, _, c = run()
                if any((m != b).any() for m, b in zip(_masks(c), base)):
                    flat[i] = orig
                    raise _KinkCrossed(name)
                values.append(loss)
            flat[i] = orig
            numeric[i] = (values[0] - values[1]) / (2 * eps)
        analytic = grads[name].reshape(-1)
        per_tensor[name] = relative_error(analytic, numeric)
        denom = np.maximum(np.maximum(np.abs(analytic), np.abs(numeric)), 1e-12)
        elementwise = max(elementwise, float((np.abs(analytic - numeric) / denom).max()))
        checked += flat.size
    return per_tensor, elementwise, checked


def gradient_check(config: ModelConfig | None = None, batch: int = 4, eps: float = 1e-5,
                   seed: int = 0, max_redraws: int = 50) -> GradCheckResult:
    """Compare backprop against ``(f(w + eps) - f(w - eps)) / (2 eps)`` in float64.

    Dropout masks are redrawn from the same seed on every evaluation so the
    loss is a fixed function of the weights. Central differences only
    approximate the derivative where no ReLU switches inside ``[w - eps,
    w + eps]``; if any perturbation flips a ReLU mask the probe point (inputs,
    labels, weights) is redrawn from the next seed.
    """
    config = config or ModelConfig(seed=seed, **REDUCED)
    start = time.perf_counter()
    for redraws in range(max_redraws):
        probe_seed = seed + redraws
        x, y, params = _probe(config, batch, probe_seed)
        try:
            per_tensor, elementwise, checked = _check_at(config, x, y, params, eps, probe_seed + 10_000)
        except _KinkCrossed:
            continue
        return GradCheckResult(max(per_tensor.values()), per_tensor, time.perf_counter() - start,
                               checked, redraws, elementwise)
    raise NumericError(f"no kink-free probe point found in {max_redraws} draws", layer="relu")
