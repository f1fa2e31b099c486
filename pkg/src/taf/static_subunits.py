"""Static subunit channels from externally segmented hand masks.

Masks arrive as one 8-bit label PNG per frame (``%06d.png``): 0 background,
1 right hand, 2 left hand. At each keyframe the left and right masks are
resized to the TAF grid, binarised and merged into one channel (keyframe
variant), or five such channels for frames ``k-2 .. k+2`` (keyshot variant).
"""
from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .colorize import TafTensor
from .errors import CoverageError, FormatError, GapError, ParameterError, ShapeError
from .pngio import frame_paths, read_png, write_gray
from .skeleton_io import GRID_SHAPE

BACKGROUND, RIGHT, LEFT = 0, 1, 2
KEYFRAME = "keyframe"
KEYSHOT = "keyshot"
KEYSHOT_OFFSETS = (-2, -1, 0, 1, 2)


@dataclass(frozen=True)
class HandMaskFrame:
    frame_index: int
    left: np.ndarray
    right: np.ndarray

    def __post_init__(self):
        if self.left.shape != self.right.shape:
            raise ShapeError("left and right masks differ in size")

    def labels(self) -> np.ndarray:
        out = np.zeros(self.left.shape, dtype=np.uint8)
        out[self.left.astype(bool)] = LEFT
        out[self.right.astype(bool)] = RIGHT
        return out


@dataclass
class StaticChannels:
    variant: str
    frames: list[int]
    data: np.ndarray

    @property
    def tags(self) -> list[str]:
        if self.variant == KEYFRAME:
            return [f"static:keyframe:f={f}" for f in self.frames]
        k = len(KEYSHOT_OFFSETS)
        return [
            f"static:keyshot:f={self.frames[i]}:o={KEYSHOT_OFFSETS[i % k]:+d}"
            for i in range(len(self.frames))
        ]


def masks_from_labels(index: int, labels: np.ndarray) -> HandMaskFrame:
    labels = np.asarray(labels)
    unknown = ~np.isin(labels, (BACKGROUND, RIGHT, LEFT))
    if unknown.any():
        raise FormatError(f"frame {index}: unknown label values {sorted(set(labels[unknown].tolist()))}")
    return HandMaskFrame(index, (labels == LEFT).astype(np.uint8), (labels == RIGHT).astype(np.uint8))


def load_masks(directory) -> list[HandMaskFrame]:
    paths = frame_paths(directory)
    frames = []
    for expected, path in enumerate(paths):
        index = int(path.stem)
        if index != expected:
            raise GapError(f"{directory}: mask for frame {expected} is missing")
        labels = read_png(path)
        if labels.ndim != 2:
            raise FormatError(f"{path}: label image must be single-channel")
        frames.append(masks_from_labels(index, labels))
    return frames


def write_masks(directory, masks: list[HandMaskFrame]) -> None:
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    for m in masks:
        write_gray(directory / f"{m.frame_index:06d}.png", m.labels())


def _area_weights(n_in: int, n_out: int) -> np.ndarray:
    """(n_out, n_in) matrix of overlap fractions between output and input cells."""
    edges_out = np.arange(n_out + 1) * (n_in / n_out)
    lo = np.maximum(edges_out[:-1, None], np.arange(n_in)[None, :])
    hi = np.minimum(edges_out[1:, None], np.arange(1, n_in + 1)[None, :])
    overlap = np.clip(hi - lo, 0.0, None)
    return overlap / overlap.sum(axis=1, keepdims=True)


def resize_binarize(mask, target=GRID_SHAPE) -> np.ndarray:
    """Area-weighted resample of a binary mask, then threshold at 0.5."""
    mask = np.asarray(mask, dtype=np.float64)
    if mask.ndim != 2 or mask.size == 0:
        raise ShapeError("mask must be a non-empty 2-D array")
    rows = _area_weights(mask.shape[0], target[0])
    cols = _area_weights(mask.shape[1], target[1])
    coverage = rows @ mask @ cols.T
    return (coverage >= 0.5 - 1e-12).astype(np.uint8)


def build_static_channels(masks: list[HandMaskFrame], keyframes, variant: str,
                          T: int | None = None, target=GRID_SHAPE) -> StaticChannels:
    if variant not in (KEYFRAME, KEYSHOT):
        raise ParameterError(f"unknown static variant {variant!r}")
    T = len(masks) if T is None else T
    by_index = {m.frame_index: m for m in masks}
    frames = []
    for k in keyframes:
        if not 0 <= k < T:
            raise CoverageError(f"keyframe {k} outside the {T}-frame sequence")
        offsets = (0,) if variant == KEYFRAME else KEYSHOT_OFFSETS
        frames.extend(min(max(k + o, 0), T - 1) for o in offsets)
    channels = []
    for f in frames:
        if f not in by_index:
            raise CoverageError(f"no hand mask for frame {f}")
        m = by_index[f]
        channels.append(np.maximum(resize_binarize(m.left, target), resize_binarize(m.right, target)))
    data = np.stack(channels) if channels else np.zeros((0,) + tuple(target), dtype=np.uint8)
    return StaticChannels(variant, frames, data)


def append_static(taf: TafTensor, static: StaticChannels) -> TafTensor:
    if static.data.shape[1:] != taf.data.shape[1:]:
        raise ShapeError(f"static channels {static.data.shape[1:]} do not match TAF grid {taf.data.shape[1:]}")
    data = np.concatenate([taf.data, static.data.astype(taf.data.dtype)], axis=0)
    return TafTensor(data, list(taf.tags) + static.tags)


def static_part(taf: TafTensor) -> np.ndarray:
    return taf.data[taf.select(lambda tag: tag.startswith("static:"))]
