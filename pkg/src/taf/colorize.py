"""Temporal accumulation of heatmap stacks into TAF images.

Two colourisation schemes are provided:

``accumulate_baseline``
    C temporal channels with piecewise-linear (hat) time weights. Each joint
    contributes ``[U_1..U_C, I, N_1..N_C]``.
``accumulate_hue``
    Every frame is coloured in HSV (hue = temporal unit, saturation = position
    inside the unit, value = heatmap strength), converted to RGB and summed.
    Each joint contributes ``[U_r, U_g, U_b, I, N_r, N_g, N_b]``.

Outputs are :class:`TafTensor` objects with channel-major ``(C, H, W)`` data
and one semantic tag per channel.
"""
from __future__ import annotations

import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import DegenerateInputError, FormatError, ParameterError, SegmentationError, ShapeError
from .keyframes import segment
from .skeleton_io import NUM_CHANNELS, JointId

EPS = 1e-6
DEFAULT_S_MIN = 0.25
HUE_RANGE = 180.0
RGB = ("r", "g", "b")
HUE_CHANNELS_PER_JOINT = 7


@dataclass
class TafTensor:
    data: np.ndarray
    tags: list[str]

    def __post_init__(self):
        self.data = np.asarray(self.data)
        if self.data.ndim != 3:
            raise ShapeError(f"TAF data must be (channels, H, W), got {self.data.shape}")
        if len(self.tags) != self.data.shape[0]:
            raise ShapeError(f"{len(self.tags)} tags for {self.data.shape[0]} channels")

    @property
    def channels(self) -> int:
        return self.data.shape[0]

    @property
    def shape(self):
        return self.data.shape

    def select(self, predicate) -> np.ndarray:
        return np.array([i for i, tag in enumerate(self.tags) if predicate(tag)], dtype=np.int64)

    def normalized_indices(self) -> np.ndarray:
        return self.select(lambda tag: _group(tag).startswith("N"))

    def intensity_indices(self) -> np.ndarray:
        return self.select(lambda tag: _group(tag) == "I")


def _group(tag: str) -> str:
    return tag.rsplit(":", 1)[-1]


# --------------------------------------------------------------------------
# temporal schemes

@dataclass(frozen=True)
class Linear:
    channels: int

    def __post_init__(self):
        if self.channels < 2:
            raise ParameterError(f"linear scheme needs C >= 2, got {self.channels}")

    def segments(self, T: int) -> list[tuple[int, int]]:
        C = self.channels
        bounds = [(k * T) // C for k in range(C + 1)]
        segs = list(zip(bounds[:-1], bounds[1:]))
        if any(b <= a for a, b in segs):
            raise SegmentationError(f"cannot split {T} frames into {C} non-empty groups")
        return segs


@dataclass(frozen=True)
class Subunit:
    keyframes: tuple[int, ...] = field(default_factory=tuple)

    def __post_init__(self):
        object.__setattr__(self, "keyframes", tuple(int(k) for k in self.keyframes))

    def segments(self, T: int) -> list[tuple[int, int]]:
        return segment(T, self.keyframes)


# --------------------------------------------------------------------------
# baseline (PoTion-style)

def potion_weights(t: float, T: int, C: int) -> np.ndarray:
    """Hat-function weights of frame ``t`` over ``C`` temporal channels."""
    if T < 2:
        raise DegenerateInputError(f"need at least 2 frames, got T={T}")
    if C < 2:
        raise ParameterError(f"need C >= 2, got {C}")
    if not 0 <= t < T:
        raise ParameterError(f"frame {t} outside [0, {T})")
    x = (t / (T - 1)) * (C - 1)
    return np.maximum(0.0, 1.0 - np.abs(x - np.arange(C)))


def potion_weight_matrix(T: int, C: int) -> np.ndarray:
    return np.stack([potion_weights(t, T, C) for t in range(T)])


def _normalize(U: np.ndarray, norm: str) -> np.ndarray:
    """Divide accumulated channels (axis 1 of a (J, K, H, W) array)."""
    if norm == "pixel":
        denom = U.max(axis=1, keepdims=True)
    elif norm == "channel":
        denom = U.max(axis=(2, 3), keepdims=True)
    else:
        raise ParameterError(f"unknown normalisation {norm!r}")
    return U / np.maximum(EPS, denom)


def _joint_tags(groups: list[str], prefix: str = "") -> list[str]:
    return [f"{prefix}{JointId(j).name}:{g}" for j in range(NUM_CHANNELS) for g in groups]


def _check_stack(stack) -> np.ndarray:
    stack = np.asarray(stack, dtype=np.float64)
    if stack.ndim != 4 or stack.shape[1] != NUM_CHANNELS:
        raise ShapeError(f"heatmap stack must be (T, {NUM_CHANNELS}, H, W), got {stack.shape}")
    return stack


def _layout(U: np.ndarray, N: np.ndarray) -> np.ndarray:
    """Per joint: accumulated channels, their sum, normalised channels."""
    intensity = U.sum(axis=1, keepdims=True)
    J, _, H, W = U.shape
    return np.concatenate([U, intensity, N], axis=1).reshape(-1, H, W)


def accumulate_baseline(stack, C: int, norm: str = "pixel") -> TafTensor:
    """``11 * (2C + 1)`` channel PoTion-style accumulation."""
    stack = _check_stack(stack)
    T = stack.shape[0]
    if T < 2:
        raise SegmentationError("need at least 2 frames")
    w = potion_weight_matrix(T, C)
    U = np.einsum("tc,tjhw->jchw", w, stack)
    groups = [f"U{c}" for c in range(1, C + 1)] + ["I"] + [f"N{c}" for c in range(1, C + 1)]
    return TafTensor(_layout(U, _normalize(U, norm)), _joint_tags(groups))


# --------------------------------------------------------------------------
# hue scheme

def hue_for(n: int, segment_count: int) -> float:
    """Hue (OpenCV 0-180 scale) of the n-th of ``segment_count`` temporal units.

    ``n * 180 / (segment_count + 1)`` keeps the first and last units apart.
    """
    if segment_count < 1 or not 1 <= n <= segment_count:
        raise ParameterError(f"segment {n} out of range 1..{segment_count}")
    return n * HUE_RANGE / (segment_count + 1)


def hsv_to_rgb(h, s, v) -> np.ndarray:
    """Vectorised HSV to RGB with hue on the 0-180 scale; returns (..., 3)."""
    h = np.asarray(h, dtype=np.float64)
    s = np.asarray(s, dtype=np.float64)
    v = np.asarray(v, dtype=np.float64)
    h6 = (h / 30.0) % 6.0
    sector = np.floor(h6).astype(np.int64)
    f = h6 - sector
    p = v * (1.0 - s)
    q = v * (1.0 - s * f)
    t = v * (1.0 - s * (1.0 - f))
    choices = [
        np.stack([v, t, p], -1),
        np.stack([q, v, p], -1),
        np.stack([p, v, t], -1),
        np.stack([p, q, v], -1),
        np.stack([t, p, v], -1),
        np.stack([v, p, q], -1),
    ]
    out = np.zeros(np.broadcast(h, s, v).shape + (3,))
    for k, rgb in enumerate(choices):
        out = np.where((sector == k)[..., None], rgb, out)
    return out


def frame_hsv(T: int, segments, s_min: float = DEFAULT_S_MIN) -> tuple[np.ndarray, np.ndarray]:
    """Hue and saturation of every frame for the given temporal units."""
    if not 0 <= s_min <= 1:
        raise ParameterError(f"s_min must lie in [0, 1], got {s_min}")
    hue = np.empty(T)
    sat = np.empty(T)
    S = len(segments)
    for n, (a, b) in enumerate(segments, start=1):
        if b <= a:
            raise SegmentationError(f"empty segment [{a}, {b})")
        hue[a:b] = hue_for(n, S)
        pos = np.arange(b - a) / (b - a - 1) if b - a > 1 else np.ones(1)
        sat[a:b] = s_min + (1.0 - s_min) * pos
    return hue, sat


def frame_colors(T: int, segments, s_min: float = DEFAULT_S_MIN) -> np.ndarray:
    """(T, 3) RGB colour of each frame at unit value."""
    hue, sat = frame_hsv(T, segments, s_min)
    return hsv_to_rgb(hue, sat, np.ones(T))


def _hue_block(stack: np.ndarray, segments, s_min: float, norm: str) -> np.ndarray:
    colors = frame_colors(stack.shape[0], segments, s_min)
    # RGB = V * rgb(h, s, 1), so each frame contributes colour x heatmap
    U = np.einsum("tk,tjhw->jkhw", colors, stack)
    return _layout(U, _normalize(U, norm))


HUE_GROUPS = [f"U_{c}" for c in RGB] + ["I"] + [f"N_{c}" for c in RGB]


def accumulate_hue(stack, scheme, s_min: float = DEFAULT_S_MIN, norm: str = "pixel") -> TafTensor:
    """77-channel hue accumulation under a Linear or Subunit scheme."""
    stack = _check_stack(stack)
    T = stack.shape[0]
    if T < 2:
        raise SegmentationError("need at least 2 frames")
    segments = scheme.segments(T)
    return TafTensor(_hue_block(stack, segments, s_min, norm), _joint_tags(HUE_GROUPS))


def accumulate_sequential(stack, keyframes, s_min: float = DEFAULT_S_MIN, norm: str = "pixel") -> TafTensor:
    """Accumulate each subunit as its own gesture and concatenate them."""
    stack = _check_stack(stack)
    segments = segment(stack.shape[0], list(keyframes))
    if len(segments) < 2:
        raise SegmentationError("sequential accumulation needs at least one keyframe")
    blocks, tags = [], []
    for n, (a, b) in enumerate(segments, start=1):
        sub = stack[a:b]
        blocks.append(_hue_block(sub, [(0, b - a)], s_min, norm))
        tags.extend(_joint_tags(HUE_GROUPS, prefix=f"seg{n}/"))
    return TafTensor(np.concatenate(blocks, axis=0), tags)


# --------------------------------------------------------------------------
# transforms

def flip_horizontal(taf: TafTensor) -> TafTensor:
    """Mirror every channel along the width; channel order is untouched."""
    return TafTensor(taf.data[:, :, ::-1].copy(), list(taf.tags))


def swap_sides(taf: TafTensor) -> TafTensor:
    """Exchange left/right joint channel groups (static channels stay put)."""
    index = {tag: i for i, tag in enumerate(taf.tags)}
    order = []
    for tag in taf.tags:
        prefix, _, rest = tag.rpartition("/")
        name, sep, group = rest.partition(":")
        if sep and name in JointId.__members__:
            mirrored = JointId[name].mirror.name
            other = f"{prefix}/{mirrored}:{group}" if prefix else f"{mirrored}:{group}"
            order.append(index[other])
        else:
            order.append(index[tag])
    return TafTensor(taf.data[order], list(taf.tags))


# --------------------------------------------------------------------------
# channel arithmetic

def expected_channels(scheme: str, C: int = 3, k: int = 0, static: str = "none", sequential: bool = False) -> int:
    """Channel count of an extracted tensor.

    baseline: ``11 (2C + 1)``; hue: ``11 * 7`` (times ``K + 1`` when
    sequential); plus ``K`` static keyframe or ``5K`` keyshot channels.
    """
    if scheme == "baseline":
        if sequential:
            raise ParameterError("sequential accumulation uses the hue scheme")
        base = NUM_CHANNELS * (2 * C + 1)
    elif scheme == "hue":
        base = NUM_CHANNELS * HUE_CHANNELS_PER_JOINT * ((k + 1) if sequential else 1)
    else:
        raise ParameterError(f"unknown scheme {scheme!r}")
    extra = {"none": 0, "keyframe": k, "keyshot": 5 * k}
    if static not in extra:
        raise ParameterError(f"unknown static variant {static!r}")
    return base + extra[static]


# --------------------------------------------------------------------------
# binary format

MAGIC = b"TAF1"


def write_taf(taf: TafTensor, path) -> None:
    """``TAF1`` | u32 H, W, C | per tag: u32 byte length + UTF-8 | float32 data (C, H, W)."""
    C, H, W = taf.data.shape
    parts = [MAGIC, struct.pack("<III", H, W, C)]
    for tag in taf.tags:
        raw = tag.encode("utf-8")
        parts.append(struct.pack("<I", len(raw)))
        parts.append(raw)
    parts.append(np.ascontiguousarray(taf.data, dtype="<f4").tobytes())
    Path(path).write_bytes(b"".join(parts))


def read_taf(path) -> TafTensor:
    buf = Path(path).read_bytes()
    if buf[:4] != MAGIC:
        raise FormatError(f"{path}: not a TAF1 file")
    try:
        H, W, C = struct.unpack_from("<III", buf, 4)
        pos = 16
        tags = []
        for _ in range(C):
            (n,) = struct.unpack_from("<I", buf, pos)
            pos += 4
            tags.append(buf[pos:pos + n].decode("utf-8"))
            pos += n
    except (struct.error, UnicodeDecodeError) as exc:
        raise FormatError(f"{path}: corrupt header ({exc})") from None
    expected = C * H * W * 4
    if len(buf) - pos != expected:
        raise FormatError(f"{path}: expected {expected} data bytes, found {len(buf) - pos}")
    data = np.frombuffer(buf, dtype="<f4", offset=pos).reshape(C, H, W).astype(np.float32)
    return TafTensor(data, tags)
