"""Skeleton sequences: the tracked joint set, text I/O, and grid projection.

A sequence stores world coordinates as a ``(T, 10, 3)`` float array (meters,
camera space, y pointing up) and optional image coordinates as ``(T, 10, 2)``
(pixels, ``u`` to the right, ``v`` down). Missing joints are NaN.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterator

import numpy as np

from .errors import DegenerateInputError, ParseError, SchemaError

GRID_HEIGHT = 64
GRID_WIDTH = 116
GRID_SHAPE = (GRID_HEIGHT, GRID_WIDTH)

MARGIN = 0.10


class JointId(enum.IntEnum):
    """The ten tracked arm/hand joints plus the virtual background channel."""

    L_UPPER_ARM = 0
    L_ELBOW = 1
    L_WRIST = 2
    L_HAND_TIP = 3
    L_THUMB = 4
    R_UPPER_ARM = 5
    R_ELBOW = 6
    R_WRIST = 7
    R_HAND_TIP = 8
    R_THUMB = 9
    BACKGROUND = 10

    @property
    def side(self) -> str | None:
        if self is JointId.BACKGROUND:
            return None
        return "left" if self.name.startswith("L_") else "right"

    @property
    def mirror(self) -> "JointId":
        if self is JointId.BACKGROUND:
            return self
        prefix = "R_" if self.side == "left" else "L_"
        return JointId[prefix + self.name[2:]]


NUM_JOINTS = 10
NUM_CHANNELS = NUM_JOINTS + 1
PHYSICAL_JOINTS = tuple(JointId(i) for i in range(NUM_JOINTS))
WRISTS = {"left": JointId.L_WRIST, "right": JointId.R_WRIST}
# joint index -> index of its left/right partner
MIRROR_PERMUTATION = np.array([j.mirror.value for j in PHYSICAL_JOINTS])


@dataclass(frozen=True)
class SkeletonFrame:
    frame_index: int
    world: np.ndarray
    image: np.ndarray | None = None

    @property
    def missing(self) -> np.ndarray:
        return ~np.isfinite(self.world).all(axis=-1)


@dataclass
class SkeletonSequence:
    """Ordered per-frame joint positions for one sign video."""

    frame_index: np.ndarray
    world: np.ndarray
    image: np.ndarray | None = None
    sign_label: int = 0
    signer_id: int = 0
    fps: float = 30.0
    meta: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        self.frame_index = np.asarray(self.frame_index, dtype=np.int64)
        self.world = np.asarray(self.world, dtype=np.float64)
        if self.image is not None:
            self.image = np.asarray(self.image, dtype=np.float64)
        validate(self)

    @property
    def T(self) -> int:
        return len(self.frame_index)

    @property
    def frames(self) -> Iterator[SkeletonFrame]:
        for t in range(self.T):
            image = None if self.image is None else self.image[t]
            yield SkeletonFrame(int(self.frame_index[t]), self.world[t], image)

    def __eq__(self, other):
        if not isinstance(other, SkeletonSequence):
            return NotImplemented
        if (self.image is None) != (other.image is None):
            return False
        same_image = self.image is None or np.array_equal(self.image, other.image, equal_nan=True)
        return (
            self.sign_label == other.sign_label
            and self.signer_id == other.signer_id
            and self.fps == other.fps
            and np.array_equal(self.frame_index, other.frame_index)
            and np.array_equal(self.world, other.world, equal_nan=True)
            and same_image
        )


def validate(seq: SkeletonSequence) -> None:
    T = len(seq.frame_index)
    if T < 2:
        raise SchemaError(f"sequence needs at least 2 frames, got {T}")
    if np.any(np.diff(seq.frame_index) <= 0):
        raise SchemaError("frame indices must be strictly increasing")
    if seq.world.shape != (T, NUM_JOINTS, 3):
        raise SchemaError(f"world coordinates must have shape ({T}, {NUM_JOINTS}, 3), got {seq.world.shape}")
    if seq.image is not None and seq.image.shape != (T, NUM_JOINTS, 2):
        raise SchemaError(f"image coordinates must have shape ({T}, {NUM_JOINTS}, 2), got {seq.image.shape}")
    if np.isinf(seq.world).any():
        raise SchemaError("world coordinates must be finite or NaN (missing)")


# --------------------------------------------------------------------------
# text format

def _format_header(seq: SkeletonSequence) -> str:
    return f"TAFSKEL v1 T={seq.T} fps={seq.fps!r} sign={seq.sign_label} signer={seq.signer_id}"


def format_sequence(seq: SkeletonSequence) -> str:
    lines = [_format_header(seq)]
    for t in range(seq.T):
        fields = [str(int(seq.frame_index[t]))]
        fields.extend(f"{v:.6f}" for v in seq.world[t].ravel())
        if seq.image is not None:
            fields.extend(f"{v:.6f}" for v in seq.image[t].ravel())
        lines.append(" ".join(fields))
    return "\n".join(lines) + "\n"


def write_sequence(seq: SkeletonSequence, path) -> None:
    Path(path).write_text(format_sequence(seq), encoding="utf-8", newline="\n")


def _parse_header(line: str) -> dict:
    parts = line.split(" ")
    if parts[:2] != ["TAFSKEL", "v1"] or len(parts) != 6:
        raise ParseError("bad header, expected 'TAFSKEL v1 T=<int> fps=<float> sign=<id> signer=<id>'", line=1)
    header = {}
    for part, (key, conv) in zip(parts[2:], [("T", int), ("fps", float), ("sign", int), ("signer", int)]):
        name, _, value = part.partition("=")
        if name != key:
            raise ParseError(f"expected header field {key!r}, got {name!r}", line=1)
        try:
            header[key] = conv(value)
        except ValueError:
            raise ParseError(f"bad value for header field {key!r}: {value!r}", line=1) from None
    return header


def parse_text(text: str) -> SkeletonSequence:
    lines = text.split("\n")
    if lines and lines[-1] == "":
        lines.pop()
    if not lines:
        raise ParseError("empty file", line=1)
    header = _parse_header(lines[0])
    n_world = NUM_JOINTS * 3
    n_image = NUM_JOINTS * 2
    indices, world, image = [], [], []
    has_image = None
    for lineno, line in enumerate(lines[1:], start=2):
        tokens = line.split(" ")
        if len(tokens) not in (1 + n_world, 1 + n_world + n_image):
            raise SchemaError(
                f"line {lineno}: expected {1 + n_world} or {1 + n_world + n_image} fields, got {len(tokens)}"
            )
        if has_image is None:
            has_image = len(tokens) > 1 + n_world
        elif has_image != (len(tokens) > 1 + n_world):
            raise SchemaError(f"line {lineno}: all frames must carry the same columns")
        try:
            indices.append(int(tokens[0]))
            values = [float(tok) for tok in tokens[1:]]
        except ValueError as exc:
            raise ParseError(str(exc), line=lineno) from None
        world.append(values[:n_world])
        if has_image:
            image.append(values[n_world:])
    if len(indices) != header["T"]:
        raise SchemaError(f"header declares T={header['T']} but file has {len(indices)} frames")
    T = len(indices)
    return SkeletonSequence(
        frame_index=np.array(indices),
        world=np.array(world, dtype=np.float64).reshape(T, NUM_JOINTS, 3),
        image=np.array(image, dtype=np.float64).reshape(T, NUM_JOINTS, 2) if has_image else None,
        sign_label=header["sign"],
        signer_id=header["signer"],
        fps=header["fps"],
    )


def parse_sequence(path) -> SkeletonSequence:
    """Read a ``TAFSKEL v1`` file.

    Raises
    ------
    ParseError
        A token cannot be read as a number, or the header is malformed.
    SchemaError
        Wrong column count, frame count mismatch, or non-monotonic frames.
    """
    return parse_text(Path(path).read_text(encoding="utf-8"))


# --------------------------------------------------------------------------
# cleanup and geometry

def _interpolate(values: np.ndarray) -> np.ndarray:
    """Fill NaN rows of a (T, J, D) array by per-joint linear interpolation."""
    out = values.copy()
    T = values.shape[0]
    t = np.arange(T)
    for j in range(values.shape[1]):
        ok = np.isfinite(values[:, j]).all(axis=-1)
        if ok.all():
            continue
        if not ok.any():
            raise SchemaError(f"joint {JointId(j).name} is missing in every frame")
        for d in range(values.shape[2]):
            out[:, j, d] = np.interp(t, t[ok], values[ok, j, d])
    return out


def fill_missing(seq: SkeletonSequence) -> SkeletonSequence:
    """Linearly interpolate missing joints from their nearest valid frames.

    Frames before the first (after the last) valid observation repeat it.
    """
    world = _interpolate(seq.world)
    image = None if seq.image is None else _interpolate(seq.image)
    return SkeletonSequence(seq.frame_index, world, image, seq.sign_label, seq.signer_id, seq.fps, dict(seq.meta))


def mirror_sequence(seq: SkeletonSequence, swap_sides: bool = True) -> SkeletonSequence:
    """Reflect the signer horizontally (x -> -x, or u -> -u for image coords).

    With ``swap_sides`` the left/right joint labels are exchanged too, which is
    what a mirrored video of the same person would report.
    """
    world = seq.world.copy()
    world[..., 0] *= -1.0
    image = None
    if seq.image is not None:
        image = seq.image.copy()
        image[..., 0] *= -1.0
    if swap_sides:
        world = world[:, MIRROR_PERMUTATION]
        if image is not None:
            image = image[:, MIRROR_PERMUTATION]
    return SkeletonSequence(seq.frame_index, world, image, seq.sign_label, seq.signer_id, seq.fps, dict(seq.meta))


def planar_coordinates(seq: SkeletonSequence) -> np.ndarray:
    """(T, 10, 2) array of (down, right) coordinates used for projection.

    Image coordinates are used as-is when present; otherwise world x gives
    the horizontal axis and -y the vertical one.
    """
    if seq.image is not None:
        return np.stack([seq.image[..., 1], seq.image[..., 0]], axis=-1)
    return np.stack([-seq.world[..., 1], seq.world[..., 0]], axis=-1)


@dataclass(frozen=True)
class GridTransform:
    """Affine map ``grid = offset + scale * (p - origin)`` shared by both axes."""

    origin: tuple[float, float]
    scale: float
    offset: tuple[float, float]

    def apply(self, points: np.ndarray) -> np.ndarray:
        points = np.asarray(points, dtype=np.float64)
        return np.asarray(self.offset) + self.scale * (points - np.asarray(self.origin))


def fit_grid_transform(points: np.ndarray, grid=GRID_SHAPE, margin: float = MARGIN) -> GridTransform:
    """Letterboxed bounding-box fit of planar points onto pixel centres.

    The box over all points is grown by ``margin`` of its extent on each
    side, scaled uniformly so that it fits ``[0, H-1] x [0, W-1]``, and
    centred along the axis with slack.
    """
    H, W = grid
    pts = np.asarray(points, dtype=np.float64).reshape(-1, 2)
    pts = pts[np.isfinite(pts).all(axis=1)]
    if len(pts) == 0:
        raise DegenerateInputError("no valid joint positions to project")
    lo = pts.min(axis=0)
    hi = pts.max(axis=0)
    extent = hi - lo
    if not np.any(extent > 0):
        raise DegenerateInputError("all joints coincide; bounding box is a single point")
    lo = lo - margin * extent
    extent = extent * (1.0 + 2.0 * margin)
    span = np.array([H - 1, W - 1], dtype=np.float64)
    with np.errstate(divide="ignore"):
        ratios = np.where(extent > 0, span / np.where(extent > 0, extent, 1.0), np.inf)
    scale = float(ratios.min())
    offset = (span - extent * scale) / 2.0
    return GridTransform(origin=(float(lo[0]), float(lo[1])), scale=scale, offset=(float(offset[0]), float(offset[1])))


def project_to_grid(seq: SkeletonSequence, grid=GRID_SHAPE, margin: float = MARGIN) -> np.ndarray:
    """Map every joint of every frame to continuous (row, col) grid coordinates.

    Returns a ``(T, 10, 2)`` array with rows in ``[0, H-1]`` and columns in
    ``[0, W-1]``. Missing joints are interpolated first.
    """
    if np.isnan(seq.world).any() or (seq.image is not None and np.isnan(seq.image).any()):
        seq = fill_missing(seq)
    planar = planar_coordinates(seq)
    transform = fit_grid_transform(planar, grid, margin)
    return transform.apply(planar)


def hand_positions(seq: SkeletonSequence, hand: str) -> np.ndarray:
    if hand not in WRISTS:
        raise ValueError(f"hand must be 'left' or 'right', got {hand!r}")
    world = seq.world
    if np.isnan(world).any():
        world = _interpolate(world)
    return world[:, WRISTS[hand]]


def quantize(values: np.ndarray) -> np.ndarray:
    """Round to the 6-decimal grid used by the text format (exact round trip)."""
    values = np.asarray(values, dtype=np.float64)
    flat = [float(f"{v:.6f}") if math.isfinite(v) else v for v in values.ravel()]
    return np.array(flat, dtype=np.float64).reshape(values.shape)
