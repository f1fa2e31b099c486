"""Keyframe detection: hand speed minima, frame entropy, density peaks.

Three detectors split a sign video into dynamic subunits:

* ``detect_hs_heuristic`` - slowest hand-speed minima of both hands,
* ``detect_entropy_dc``   - density-peak clustering of frame-entropy extrema,
* ``detect_hs_dc``        - density-peak clustering of the dominant hand's
  speed minima, selecting ``K + 2`` and dropping the outermost two.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import (
    InsufficientKeyframesError,
    ParameterError,
    SegmentationError,
    StationaryHandWarning,
)
from .skeleton_io import SkeletonSequence, hand_positions

HS_HEU = "hs_heu"
ENT_DC = "ent_dc"
HS_DC = "hs_dc"
METHODS = (HS_HEU, ENT_DC, HS_DC)

DEFAULT_TAU = 0.15
DEFAULT_CUTOFF_PERCENTILE = 2.0
MIN_CUTOFF = 1e-6


@dataclass(frozen=True)
class FixedLength:
    k: int

    def __post_init__(self):
        if self.k < 0:
            raise ParameterError(f"K must be non-negative, got {self.k}")

    def __str__(self):
        return f"FL-{self.k}"


@dataclass(frozen=True)
class VariableLength:
    threshold: float = DEFAULT_TAU

    def __str__(self):
        return f"VL-{self.threshold:g}"


@dataclass(frozen=True)
class KeyframeSet:
    indices: tuple[int, ...]
    method: str
    mode: FixedLength | VariableLength

    def __post_init__(self):
        object.__setattr__(self, "indices", tuple(int(i) for i in self.indices))
        if any(b <= a for a, b in zip(self.indices, self.indices[1:])):
            raise SegmentationError(f"keyframes must be strictly increasing: {self.indices}")

    def __len__(self):
        return len(self.indices)

    def __iter__(self):
        return iter(self.indices)


# --------------------------------------------------------------------------
# signals

def hand_speed(seq: SkeletonSequence, hand: str) -> np.ndarray:
    """Per-frame wrist displacement, normalised to [0, 1] by its maximum.

    ``s[0] = 0`` and ``s[t] = |p[t] - p[t-1]|`` in world coordinates. A hand
    that never moves yields all zeros and a :class:`StationaryHandWarning`.
    """
    p = hand_positions(seq, hand)
    speed = np.zeros(len(p))
    speed[1:] = np.linalg.norm(np.diff(p, axis=0), axis=1)
    peak = speed.max()
    if peak == 0:
        warnings.warn(f"{hand} hand is stationary", StationaryHandWarning, stacklevel=2)
        return speed
    return speed / peak


def path_length(seq: SkeletonSequence, hand: str) -> float:
    p = hand_positions(seq, hand)
    return float(np.linalg.norm(np.diff(p, axis=0), axis=1).sum())


def _runs(signal: np.ndarray):
    """Maximal runs of equal values as (start, stop) half-open pairs."""
    breaks = np.flatnonzero(signal[1:] != signal[:-1]) + 1
    starts = np.concatenate([[0], breaks])
    stops = np.concatenate([breaks, [len(signal)]])
    return zip(starts.tolist(), stops.tolist())


def _extrema(signal: np.ndarray, sign: float) -> list[int]:
    s = sign * np.asarray(signal, dtype=np.float64)
    n = len(s)
    out = []
    for start, stop in _runs(s):
        if start == 0 or stop == n:
            continue
        if s[start - 1] > s[start] and s[stop] > s[start]:
            out.append((start + stop - 1) // 2)
    return out


def local_minima(signal) -> list[int]:
    """Interior local minima; a flat bottom yields its (lower) midpoint.

    A run of equal values counts when both neighbouring values are strictly
    larger, so shoulders of a descending staircase are not minima.
    """
    signal = np.asarray(signal, dtype=np.float64)
    if len(signal) < 3:
        raise ParameterError("need at least 3 samples to find interior minima")
    return _extrema(signal, 1.0)


def local_maxima(signal) -> list[int]:
    signal = np.asarray(signal, dtype=np.float64)
    if len(signal) < 3:
        raise ParameterError("need at least 3 samples to find interior maxima")
    return _extrema(signal, -1.0)


# --------------------------------------------------------------------------
# density peaks

def pairwise_distances(points: np.ndarray) -> np.ndarray:
    points = np.asarray(points, dtype=np.float64)
    if points.ndim == 1:
        points = points[:, None]
    diff = points[:, None, :] - points[None, :, :]
    return np.sqrt((diff**2).sum(axis=-1))


def default_cutoff(distances: np.ndarray, percentile: float = DEFAULT_CUTOFF_PERCENTILE) -> float:
    n = len(distances)
    if n < 2:
        return 1.0
    upper = distances[np.triu_indices(n, k=1)]
    return max(float(np.percentile(upper, percentile)), MIN_CUTOFF)


def density_peaks(distances: np.ndarray, cutoff: float):
    """Local density, distance to denser point, and their product.

    ``rho_i = sum_{j != i} exp(-(d_ij / cutoff)^2)``; ``delta_i`` is the
    distance to the nearest strictly denser point, or the largest distance
    from ``i`` when no denser point exists. Densities are summed with
    exact rounding so that duplicate points get bit-identical ``rho`` and
    neither counts as denser than its twin.
    """
    d = np.asarray(distances, dtype=np.float64)
    n = len(d)
    kernel = np.exp(-((d / cutoff) ** 2))
    np.fill_diagonal(kernel, 0.0)
    rho = np.array([math.fsum(row) for row in kernel])
    denser = rho[None, :] > rho[:, None]
    masked = np.where(denser, d, np.inf)
    delta = masked.min(axis=1) if n else np.zeros(0)
    top = ~denser.any(axis=1)
    if n > 1:
        delta[top] = d[top].max(axis=1)
    else:
        delta[:] = 0.0
    return rho, delta, rho * delta


def density_peak_cluster(points, k: int, cutoff: float | None = None,
                         percentile: float = DEFAULT_CUTOFF_PERCENTILE) -> list[int]:
    """Indices of the ``k`` points with largest ``rho * delta``.

    Ties go to the lower index. The result is ordered by decreasing score.
    ``cutoff`` defaults to the given percentile of all pairwise distances.
    """
    points = np.asarray(points, dtype=np.float64)
    n = len(points)
    if k > n:
        raise ParameterError(f"asked for {k} representatives from {n} points")
    if k < 0:
        raise ParameterError("k must be non-negative")
    if cutoff is not None and not cutoff > 0:
        raise ParameterError(f"cutoff must be positive, got {cutoff}")
    d = pairwise_distances(points)
    if cutoff is None:
        cutoff = default_cutoff(d, percentile)
    _, _, gamma = density_peaks(d, cutoff)
    order = np.lexsort((np.arange(n), -gamma))
    return order[:k].tolist()


# --------------------------------------------------------------------------
# detectors

def _check_interior(indices, T: int) -> None:
    if any(not 0 < i < T for i in indices):
        raise SegmentationError(f"keyframes must lie strictly inside (0, {T}): {list(indices)}")


def detect_hs_heuristic(seq: SkeletonSequence, mode) -> KeyframeSet:
    """Slowest hand-speed minima pooled over both hands.

    A stationary hand contributes no candidates. Candidates at the same frame
    from both hands are merged keeping the lower speed; remaining speed ties
    go to the earlier frame.
    """
    candidates: dict[int, float] = {}
    for hand in ("left", "right"):
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", StationaryHandWarning)
            speed = hand_speed(seq, hand)
        if not speed.any():
            continue
        for t in local_minima(speed):
            candidates[t] = min(candidates.get(t, np.inf), float(speed[t]))
    frames = sorted(candidates, key=lambda t: (candidates[t], t))
    if isinstance(mode, FixedLength):
        if len(frames) < mode.k:
            raise InsufficientKeyframesError(f"found {len(frames)} speed minima, need {mode.k}")
        chosen = frames[: mode.k]
    else:
        chosen = [t for t in frames if candidates[t] < mode.threshold]
    return KeyframeSet(tuple(sorted(chosen)), HS_HEU, mode)


def dominant_hand(seq: SkeletonSequence) -> str:
    """Hand with the longer wrist path; ties go to the right hand."""
    return "left" if path_length(seq, "left") > path_length(seq, "right") else "right"


def detect_hs_dc(seq: SkeletonSequence, mode, cutoff: float | None = None,
                 percentile: float = DEFAULT_CUTOFF_PERCENTILE) -> KeyframeSet:
    """Density-peak keyframes on the dominant hand's speed minima.

    Candidates are embedded as (t / (T-1), normalised speed). In fixed mode
    ``K + 2`` representatives are chosen and the first and last (in time)
    are discarded. In variable mode every candidate is clustered and the
    representatives slower than the threshold are kept, again dropping the
    outermost two.
    """
    T = seq.T
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", StationaryHandWarning)
        speed = hand_speed(seq, dominant_hand(seq))
    minima = np.array(local_minima(speed), dtype=np.int64)
    points = np.stack([minima / (T - 1), speed[minima]], axis=1) if len(minima) else np.zeros((0, 2))
    if isinstance(mode, FixedLength):
        need = mode.k + 2
        if len(minima) < need:
            raise InsufficientKeyframesError(f"found {len(minima)} speed minima, need {need}")
        picked = density_peak_cluster(points, need, cutoff, percentile)
        frames = sorted(minima[picked].tolist())[1:-1]
    else:
        if len(minima) < 2:
            return KeyframeSet((), HS_DC, mode)
        d = pairwise_distances(points)
        c = default_cutoff(d, percentile) if cutoff is None else cutoff
        rho, delta, gamma = density_peaks(d, c)
        # a representative is a point whose nearest denser neighbour is
        # farther than the cutoff (or which has none)
        reps = np.flatnonzero(delta > c)
        reps_sorted = sorted(minima[reps].tolist())[1:-1]
        frames = [t for t in reps_sorted if speed[t] < mode.threshold]
    return KeyframeSet(tuple(frames), HS_DC, mode)


def frame_entropy(image) -> float:
    """Shannon entropy (bits) of the 256-bin intensity histogram."""
    image = np.asarray(image)
    if image.size == 0:
        raise ParameterError("empty image")
    values = np.clip(np.rint(image.astype(np.float64)), 0, 255).astype(np.int64).ravel()
    counts = np.bincount(values, minlength=256)
    p = counts[counts > 0] / values.size
    return float(-(p * np.log2(p)).sum()) + 0.0


def to_grayscale(frame) -> np.ndarray:
    frame = np.asarray(frame, dtype=np.float64)
    return frame.mean(axis=-1) if frame.ndim == 3 else frame


def detect_entropy_dc(frames, mode, cutoff: float | None = None,
                      percentile: float = DEFAULT_CUTOFF_PERCENTILE) -> KeyframeSet:
    """Density-peak keyframes on local extrema of per-frame entropy.

    Extrema (minima and maxima) are embedded as (t / (T-1), entropy scaled
    to [0, 1] over the video) and ``K`` representatives are kept.
    """
    entropy = np.array([frame_entropy(to_grayscale(f)) for f in frames])
    T = len(entropy)
    if T < 3:
        raise InsufficientKeyframesError(f"need at least 3 frames, got {T}")
    extrema = np.array(sorted(local_minima(entropy) + local_maxima(entropy)), dtype=np.int64)
    k = mode.k if isinstance(mode, FixedLength) else None
    if len(extrema) == 0 or (k is not None and len(extrema) < k):
        raise InsufficientKeyframesError(f"found {len(extrema)} entropy extrema, need {k or 1}")
    lo, hi = entropy.min(), entropy.max()
    scaled = (entropy - lo) / (hi - lo)
    points = np.stack([extrema / (T - 1), scaled[extrema]], axis=1)
    if k is None:
        d = pairwise_distances(points)
        c = default_cutoff(d, percentile) if cutoff is None else cutoff
        _, delta, _ = density_peaks(d, c)
        picked = np.flatnonzero(delta > c)
    else:
        picked = density_peak_cluster(points, k, cutoff, percentile)
    return KeyframeSet(tuple(sorted(extrema[picked].tolist())), ENT_DC, mode)


def segment(T: int, keyframes) -> list[tuple[int, int]]:
    """Half-open intervals of ``[0, T)`` split at the keyframes."""
    indices = list(keyframes)
    _check_interior(indices, T)
    if len(set(indices)) != len(indices):
        raise SegmentationError(f"duplicate keyframes: {indices}")
    bounds = [0] + sorted(indices) + [T]
    return list(zip(bounds[:-1], bounds[1:]))


# --------------------------------------------------------------------------
# report file

def format_report_line(video_id: str, kf: KeyframeSet) -> str:
    return " ".join([video_id, kf.method, str(kf.mode)] + [str(i) for i in kf.indices])


def _parse_mode(text: str):
    kind, _, value = text.partition("-")
    if kind == "FL":
        return FixedLength(int(value))
    if kind == "VL":
        return VariableLength(float(value))
    raise ValueError(f"unknown keyframe mode {text!r}")


def write_report(path, entries) -> None:
    """Write ``video_id method mode k1 ... kK`` lines for (video_id, KeyframeSet) pairs."""
    lines = [format_report_line(vid, kf) for vid, kf in entries]
    Path(path).write_text("".join(line + "\n" for line in lines), encoding="utf-8")


def read_report(path) -> dict[str, KeyframeSet]:
    out = {}
    for line in Path(path).read_text(encoding="utf-8").splitlines():
        if not line.strip():
            continue
        vid, method, mode, *idx = line.split(" ")
        out[vid] = KeyframeSet(tuple(int(i) for i in idx), method, _parse_mode(mode))
    return out
