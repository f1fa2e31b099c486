"""8-bit PNG helpers (Pillow)."""
from __future__ import annotations

from pathlib import Path

import numpy as np
from PIL import Image


def to_uint8(values, scale: float = 1.0) -> np.ndarray:
    """``round(clip(values / scale, 0, 1) * 255)`` as uint8."""
    values = np.asarray(values, dtype=np.float64) / scale
    return np.rint(np.clip(values, 0.0, 1.0) * 255.0).astype(np.uint8)


def write_gray(path, array) -> None:
    array = np.asarray(array)
    if array.ndim != 2 or array.dtype != np.uint8:
        raise ValueError("grayscale PNG needs a 2-D uint8 array")
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    Image.fromarray(array, mode="L").save(path, format="PNG")


def write_rgb(path, array) -> None:
    array = np.asarray(array)
    if array.ndim != 3 or array.shape[-1] != 3 or array.dtype != np.uint8:
        raise ValueError("RGB PNG needs an (H, W, 3) uint8 array")
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    Image.fromarray(array, mode="RGB").save(path, format="PNG")


def read_png(path) -> np.ndarray:
    with Image.open(path) as im:
        return np.array(im)


def frame_paths(directory) -> list[Path]:
    """``%06d.png`` files of a directory, sorted by frame number."""
    return sorted(Path(directory).glob("[0-9]" * 6 + ".png"))
