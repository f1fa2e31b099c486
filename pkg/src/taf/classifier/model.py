"""The small TAF CNN: blocks of 3x3 convolutions, global pooling, dense head.

Each block starts with a stride-2 convolution followed by stride-1 ones;
every convolution is followed by batch normalisation, ReLU and (in training)
dropout. Block ``b`` has ``initial_filters * 2**(b-1)`` filters.
"""
from __future__ import annotations

import dataclasses
import json
from dataclasses import dataclass, field

import numpy as np

from ..errors import NumericError, ParameterError, ShapeError
from . import layers

BN_MOMENTUM = 0.9


@dataclass(frozen=True)
class ModelConfig:
    num_classes: int
    input_channels: int
    height: int = 64
    width: int = 116
    blocks: int = 2
    convs_per_block: int = 3
    initial_filters: int = 128
    dropout_p: float = 0.5
    seed: int = 0

    def __post_init__(self):
        for name in ("num_classes", "input_channels", "height", "width", "blocks", "convs_per_block", "initial_filters"):
            if getattr(self, name) < 1:
                raise ParameterError(f"{name} must be positive")
        if not 0 <= self.dropout_p < 1:
            raise ParameterError(f"dropout_p must lie in [0, 1), got {self.dropout_p}")

    def to_json(self) -> str:
        return json.dumps(dataclasses.asdict(self), sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "ModelConfig":
        return cls(**json.loads(text))

    def conv_layers(self):
        """(name, stride, cin, cout) for every convolution in order."""
        cin = self.input_channels
        for b in range(1, self.blocks + 1):
            cout = self.initial_filters * 2 ** (b - 1)
            for j in range(1, self.convs_per_block + 1):
                yield f"{b}_{j}", (2 if j == 1 else 1), cin, cout
                cin = cout

    @property
    def feature_dim(self) -> int:
        return self.initial_filters * 2 ** (self.blocks - 1)

    def output_spatial(self) -> tuple[int, int]:
        h, w = self.height, self.width
        for _, stride, _, _ in self.conv_layers():
            h, w = layers.conv_output_shape(h, w, stride)
        return h, w

    def param_count(self) -> int:
        """Trainable parameters: ``sum(9 cin cout + 2 cout) + F K + K``."""
        total = sum(9 * cin * cout + 2 * cout for _, _, cin, cout in self.conv_layers())
        return total + self.feature_dim * self.num_classes + self.num_classes


@dataclass
class ModelParams:
    """Trainable tensors and batch-norm running statistics, in declared order."""

    weights: dict[str, np.ndarray]
    stats: dict[str, np.ndarray] = field(default_factory=dict)

    def tensors(self):
        yield from self.weights.items()
        yield from self.stats.items()

    def astype(self, dtype) -> "ModelParams":
        return ModelParams(
            {k: v.astype(dtype) for k, v in self.weights.items()},
            {k: v.astype(dtype) for k, v in self.stats.items()},
        )

    def copy(self) -> "ModelParams":
        return self.astype(next(iter(self.weights.values())).dtype)


def xavier_init(config: ModelConfig, seed: int | None = None, dtype=np.float32) -> ModelParams:
    """Glorot-uniform weights, unit BN scale, zero shifts and biases."""
    rng = np.random.default_rng(config.seed if seed is None else seed)
    weights, stats = {}, {}
    for name, _, cin, cout in config.conv_layers():
        fan_in, fan_out = 9 * cin, 9 * cout
        limit = np.sqrt(6.0 / (fan_in + fan_out))
        weights[f"conv{name}.W"] = rng.uniform(-limit, limit, size=(3, 3, cin, cout)).astype(dtype)
        weights[f"bn{name}.gamma"] = np.ones(cout, dtype=dtype)
        weights[f"bn{name}.beta"] = np.zeros(cout, dtype=dtype)
        stats[f"bn{name}.mean"] = np.zeros(cout, dtype=dtype)
        stats[f"bn{name}.var"] = np.ones(cout, dtype=dtype)
    F, K = config.feature_dim, config.num_classes
    limit = np.sqrt(6.0 / (F + K))
    weights["dense.W"] = rng.uniform(-limit, limit, size=(F, K)).astype(dtype)
    weights["dense.b"] = np.zeros(K, dtype=dtype)
    return ModelParams(weights, stats)


def _check_finite(array: np.ndarray, layer: str) -> None:
    if not np.isfinite(array).all():
        raise NumericError("non-finite activations", layer=layer)


def forward(params: ModelParams, config: ModelConfig, batch: np.ndarray, mode: str = "eval",
            rng: np.random.Generator | None = None):
    """Logits for a ``(N, C, H, W)`` batch, plus the cache for backprop.

    In ``train`` mode batch statistics are used and dropout is applied with
    masks drawn from ``rng``; ``eval`` uses running statistics, no dropout.
    Running statistics are not touched; see :func:`update_running_stats`.
    """
    if mode not in ("train", "eval"):
        raise ParameterError(f"mode must be 'train' or 'eval', got {mode!r}")
    batch = np.asarray(batch)
    expected = (config.input_channels, config.height, config.width)
    if batch.ndim != 4 or batch.shape[1:] != expected or len(batch) == 0:
        raise ShapeError(f"expected a non-empty (N, {expected[0]}, {expected[1]}, {expected[2]}) batch, got {batch.shape}")
    dtype = params.weights["dense.W"].dtype
    x = np.ascontiguousarray(batch.transpose(0, 2, 3, 1), dtype=dtype)
    if mode == "train" and config.dropout_p > 0 and rng is None:
        rng = np.random.default_rng(config.seed)
    w = params.weights
    caches = []
    for name, stride, _, _ in config.conv_layers():
        z, conv_cache = layers.conv_forward(x, w[f"conv{name}.W"], stride)
        y, bn_cache = layers.batchnorm_forward(
            z, w[f"bn{name}.gamma"], w[f"bn{name}.beta"], mode,
            params.stats.get(f"bn{name}.mean"), params.stats.get(f"bn{name}.var"),
        )
        relu_mask = y > 0
        x = y * relu_mask
        drop = None
        if mode == "train" and config.dropout_p > 0:
            drop = layers.dropout_mask(x.shape, config.dropout_p, rng, dtype)
            x = x * drop
        _check_finite(x, f"conv{name}")
        caches.append((name, conv_cache, bn_cache, relu_mask, drop))
    pooled = x.mean(axis=(1, 2))
    logits = pooled @ w["dense.W"] + w["dense.b"]
    _check_finite(logits, "dense")
    cache = {"mode": mode, "layers": caches, "pooled": pooled, "spatial": x.shape}
    return logits, cache


def backward(params: ModelParams, config: ModelConfig, dlogits: np.ndarray, cache) -> dict[str, np.ndarray]:
    w = params.weights
    grads = {}
    grads["dense.W"] = cache["pooled"].T @ dlogits
    grads["dense.b"] = dlogits.sum(axis=0)
    N, H, W, F = cache["spatial"]
    dpooled = dlogits @ w["dense.W"].T
    dx = np.broadcast_to(dpooled[:, None, None, :] / (H * W), (N, H, W, F))
    for i, (name, conv_cache, bn_cache, relu_mask, drop) in reversed(list(enumerate(cache["layers"]))):
        if drop is not None:
            dx = dx * drop
        dy = dx * relu_mask
        dz, grads[f"bn{name}.gamma"], grads[f"bn{name}.beta"] = layers.batchnorm_backward(dy, bn_cache, cache["mode"])
        dx, grads[f"conv{name}.W"] = layers.conv_backward(dz, conv_cache, need_dx=i > 0)
    return {k: grads[k] for k in w}


def loss_and_backward(params: ModelParams, config: ModelConfig, batch, labels, mode: str = "train",
                      rng: np.random.Generator | None = None):
    """Mean cross-entropy, gradients for every trainable tensor, and the cache."""
    labels = np.asarray(labels, dtype=np.int64)
    if labels.min() < 0 or labels.max() >= config.num_classes:
        raise ParameterError(f"labels must lie in [0, {config.num_classes})")
    logits, cache = forward(params, config, batch, mode, rng)
    loss, dlogits = layers.cross_entropy(logits.astype(np.float64), labels)
    if not np.isfinite(loss):
        raise NumericError("non-finite loss", layer="softmax")
    grads = backward(params, config, dlogits.astype(logits.dtype), cache)
    cache["logits"] = logits
    return loss, grads, cache


def update_running_stats(params: ModelParams, cache, momentum: float = BN_MOMENTUM) -> None:
    for name, _, bn_cache, _, _ in cache["layers"]:
        _, _, _, mean, var = bn_cache
        m, v = params.stats[f"bn{name}.mean"], params.stats[f"bn{name}.var"]
        m *= momentum
        m += (1.0 - momentum) * mean.astype(m.dtype)
        v *= momentum
        v += (1.0 - momentum) * var.astype(v.dtype)
