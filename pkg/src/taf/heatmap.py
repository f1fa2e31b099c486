"""Gaussian joint heatmaps on the 64x116 grid.

A heatmap stack is a float64 array of shape ``(T, 11, H, W)``: ten joint
channels in :class:`~taf.skeleton_io.JointId` order followed by the
background channel, the pointwise maximum of the other ten.
"""
from __future__ import annotations

import numpy as np

from .errors import ParameterError
from .skeleton_io import GRID_SHAPE, NUM_JOINTS, SkeletonSequence, project_to_grid

DEFAULT_SIGMA = 2.0
TRUNCATE = 4.0


def _check_sigma(sigma: float) -> None:
    if not sigma > 0:
        raise ParameterError(f"sigma must be positive, got {sigma}")


def _gaussians(centers: np.ndarray, sigma: float, grid) -> np.ndarray:
    """Unit-peak truncated Gaussians for an (..., 2) array of centres."""
    H, W = grid
    centers = np.asarray(centers, dtype=np.float64)
    rows = np.arange(H, dtype=np.float64)
    cols = np.arange(W, dtype=np.float64)
    dr2 = (rows - centers[..., 0, None]) ** 2
    dc2 = (cols - centers[..., 1, None]) ** 2
    d2 = dr2[..., :, None] + dc2[..., None, :]
    # subtracting the nearest-cell distance makes the peak exactly 1
    d2_min = d2.min(axis=(-2, -1), keepdims=True)
    out = np.exp(-(d2 - d2_min) / (2.0 * sigma * sigma))
    out[(d2 > (TRUNCATE * sigma) ** 2) & (d2 > d2_min)] = 0.0
    return out


def render_gaussian(center, sigma: float, grid=GRID_SHAPE) -> np.ndarray:
    """Render one joint: ``exp(-|p - center|^2 / (2 sigma^2))`` scaled to peak 1.

    Support is cut at ``4 * sigma``.
    """
    _check_sigma(sigma)
    H, W = grid
    r, c = center
    if not (0 <= r < H and 0 <= c < W):
        raise ParameterError(f"center {center} outside grid {grid}")
    return _gaussians(np.array([r, c]), sigma, grid)


def render_frame(points: np.ndarray, sigma: float = DEFAULT_SIGMA, grid=GRID_SHAPE) -> np.ndarray:
    """11-channel heatmap for the ten projected joints of one frame."""
    _check_sigma(sigma)
    points = np.asarray(points, dtype=np.float64)
    if points.shape != (NUM_JOINTS, 2):
        raise ParameterError(f"expected ({NUM_JOINTS}, 2) joint coordinates, got {points.shape}")
    joints = _gaussians(points, sigma, grid)
    return np.concatenate([joints, joints.max(axis=0, keepdims=True)], axis=0)


def render_stack(coords: np.ndarray, sigma: float = DEFAULT_SIGMA, grid=GRID_SHAPE) -> np.ndarray:
    """Heatmaps for a ``(T, 10, 2)`` array of grid coordinates."""
    _check_sigma(sigma)
    coords = np.asarray(coords, dtype=np.float64)
    if coords.ndim != 3 or coords.shape[1:] != (NUM_JOINTS, 2):
        raise ParameterError(f"expected (T, {NUM_JOINTS}, 2) coordinates, got {coords.shape}")
    joints = _gaussians(coords, sigma, grid)
    return np.concatenate([joints, joints.max(axis=1, keepdims=True)], axis=1)


def sequence_heatmaps(seq: SkeletonSequence, sigma: float = DEFAULT_SIGMA, grid=GRID_SHAPE) -> np.ndarray:
    return render_stack(project_to_grid(seq, grid), sigma, grid)
