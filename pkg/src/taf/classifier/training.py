"""Mini-batch training, evaluation and signer-independent splits."""
from __future__ import annotations

import dataclasses
import logging
import time
from dataclasses import dataclass, field

import numpy as np

from ..errors import DataError
from .checkpoint import params_checksum
from .model import ModelConfig, ModelParams, forward, loss_and_backward, update_running_stats, xavier_init
from .optim import AdamState, adam_step

log = logging.getLogger(__name__)

BATCH_SIZE = 32


@dataclass
class Dataset:
    x: np.ndarray
    y: np.ndarray
    signers: np.ndarray
    ids: list[str] = field(default_factory=list)

    def __post_init__(self):
        self.y = np.asarray(self.y, dtype=np.int64)
        self.signers = np.asarray(self.signers, dtype=np.int64)
        if not (len(self.x) == len(self.y) == len(self.signers)):
            raise DataError("dataset arrays differ in length")

    def __len__(self):
        return len(self.y)

    def subset(self, index) -> "Dataset":
        index = np.asarray(index, dtype=np.int64)
        ids = [self.ids[i] for i in index] if self.ids else []
        return Dataset(self.x[index], self.y[index], self.signers[index], ids)


def split_by_signer(data: Dataset, held_out) -> tuple[Dataset, Dataset]:
    """Train on every signer except ``held_out``; validate on the held-out ones."""
    held = np.isin(data.signers, np.atleast_1d(held_out))
    train, val = data.subset(np.flatnonzero(~held)), data.subset(np.flatnonzero(held))
    if len(train) == 0 or len(val) == 0:
        raise DataError(f"signer split leaves an empty side ({len(train)} train, {len(val)} validation)")
    return train, val


@dataclass
class EpochStats:
    epoch: int
    loss: float
    train_acc: float
    val_acc: float
    val_top5: float


@dataclass
class TrainReport:
    epochs: list[EpochStats] = field(default_factory=list)
    wall_clock: float = 0.0
    checksum: int = 0

    def to_text(self) -> str:
        return "".join(
            f"{e.epoch} {e.loss:.6f} {e.train_acc:.4f} {e.val_acc:.4f} {e.val_top5:.4f}\n" for e in self.epochs
        )

    @property
    def final(self) -> EpochStats:
        return self.epochs[-1]


def predict_logits(params: ModelParams, config: ModelConfig, x: np.ndarray, batch_size: int = 64) -> np.ndarray:
    out = [forward(params, config, x[i:i + batch_size], "eval")[0] for i in range(0, len(x), batch_size)]
    return np.concatenate(out).astype(np.float64)


def topk_hits(logits: np.ndarray, labels: np.ndarray, k: int) -> np.ndarray:
    """Whether each label is among the k largest logits (ties: lower class first)."""
    order = np.argsort(-logits, axis=1, kind="stable")[:, :k]
    return (order == np.asarray(labels)[:, None]).any(axis=1)


def accuracy_from_logits(logits, labels) -> tuple[float, float]:
    labels = np.asarray(labels)
    if len(labels) == 0:
        raise DataError("cannot evaluate an empty split")
    top1 = float(topk_hits(logits, labels, 1).mean())
    top5 = float(topk_hits(logits, labels, 5).mean())
    return top1, top5


def recalibrate_bn(params: ModelParams, config: ModelConfig, x: np.ndarray, batch_size: int = BATCH_SIZE) -> None:
    """Replace running BN statistics by population statistics of ``x`` under the final weights.

    Running averages lag behind weights that are still moving quickly when
    training ends. One pass in train mode (batch statistics, no dropout)
    pools each layer's batch means and variances into the population mean
    and variance, which then serve eval mode.
    """
    no_drop = dataclasses.replace(config, dropout_p=0.0)
    sums = {}
    for i in range(0, len(x), batch_size):
        xb = x[i:i + batch_size]
        _, cache = forward(params, no_drop, xb, "train")
        for name, _, bn_cache, _, _ in cache["layers"]:
            _, _, _, mean, var = bn_cache
            n = len(xb)
            m, sq, total = sums.get(name, (0.0, 0.0, 0))
            sums[name] = (m + n * mean.astype(np.float64), sq + n * (var + mean**2).astype(np.float64), total + n)
    for name, (m, sq, total) in sums.items():
        mean = m / total
        stats_mean, stats_var = params.stats[f"bn{name}.mean"], params.stats[f"bn{name}.var"]
        stats_mean[...] = mean
        stats_var[...] = np.maximum(sq / total - mean**2, 0.0)


def evaluate(params: ModelParams, config: ModelConfig, data: Dataset) -> tuple[float, float]:
    """Top-1 and top-5 accuracy in eval mode."""
    if len(data) == 0:
        raise DataError("cannot evaluate an empty split")
    return accuracy_from_logits(predict_logits(params, config, data.x), data.y)


def train(train_set: Dataset, config: ModelConfig, epochs: int, lr: float = 1e-3,
          val_set: Dataset | None = None, batch_size: int = BATCH_SIZE, flip_prob: float = 0.5,
          stop_train_acc: float | None = None, stop_patience: int = 2,
          params: ModelParams | None = None, recalibrate: bool = True) -> tuple[ModelParams, TrainReport]:
    """Adam training with per-epoch shuffling and random horizontal flips.

    ``stop_train_acc`` ends training once the running training accuracy has
    reached that value for ``stop_patience`` consecutive epochs; validation
    data never influences when training stops. With ``recalibrate`` the BN
    running statistics are finally replaced by population statistics of the
    training set (see :func:`recalibrate_bn`).
    """
    if len(train_set) == 0:
        raise DataError("empty training split")
    rng = np.random.default_rng(config.seed)
    params = xavier_init(config) if params is None else params
    state = AdamState()
    report = TrainReport()
    start = time.perf_counter()
    streak = 0
    for epoch in range(1, epochs + 1):
        order = rng.permutation(len(train_set))
        total_loss, correct = 0.0, 0
        for i in range(0, len(order), batch_size):
            idx = np.sort(order[i:i + batch_size])
            xb = train_set.x[idx].astype(np.float32)
            flip = rng.random(len(idx)) < flip_prob
            xb[flip] = xb[flip][..., ::-1]
            yb = train_set.y[idx]
            loss, grads, cache = loss_and_backward(params, config, xb, yb, "train", rng)
            update_running_stats(params, cache)
            adam_step(params.weights, grads, state, lr)
            total_loss += loss * len(idx)
            correct += int((cache["logits"].argmax(axis=1) == yb).sum())
        train_acc = correct / len(train_set)
        val_acc, val_top5 = evaluate(params, config, val_set) if val_set is not None and len(val_set) else (0.0, 0.0)
        stats = EpochStats(epoch, total_loss / len(train_set), train_acc, val_acc, val_top5)
        report.epochs.append(stats)
        log.info("epoch %d loss %.4f train %.3f val %.3f top5 %.3f", *vars(stats).values())
        streak = streak + 1 if stop_train_acc is not None and train_acc >= stop_train_acc else 0
        if stop_train_acc is not None and streak >= stop_patience:
            break
    if recalibrate:
        recalibrate_bn(params, config, train_set.x)
    report.wall_clock = time.perf_counter() - start
    report.checksum = params_checksum(params)
    return params, report
