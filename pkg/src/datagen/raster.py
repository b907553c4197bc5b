"""Red-dot rasterizer and PNG I/O"""
import logging
from pathlib import Path
from typing import Sequence

import numpy as np
from PIL import Image

from ..utils.errors import OutOfBounds


logger = logging.getLogger(__name__)

SUPERSAMPLE = 8


def rasterize_dot(p: Sequence[float], size: int = 64, radius: float = 4.0,
                  supersample: int = SUPERSAMPLE) -> np.ndarray:
    """
    Render an anti-aliased red disc on a white background

    The disc is centred at p * size in pixel units, x along columns and y along
    rows, with pixel (r, c) covering [c, c+1) x [r, r+1). Coverage is estimated
    on a supersample x supersample grid per pixel.

    Args:
        p: Position in the unit square
        size: Image side in pixels (>= 8)
        radius: Disc radius in pixels (>= 1)
        supersample: Subsamples per pixel side

    Returns:
        (size, size, 3) uint8 RGB array

    Raises:
        OutOfBounds: If p lies outside [0, 1]^2
    """
    if size < 8:
        raise ValueError(f"Image size must be >= 8, got {size}")
    if radius < 1:
        raise ValueError(f"Dot radius must be >= 1, got {radius}")
    x, y = float(p[0]), float(p[1])
    if not (0.0 <= x <= 1.0 and 0.0 <= y <= 1.0):
        raise OutOfBounds(f"Dot position ({x}, {y}) lies outside the unit square")

    offsets = (np.arange(supersample) + 0.5) / supersample
    coords = (np.arange(size)[:, None] + offsets[None, :]).reshape(-1)
    dx = coords - x * size
    dy = coords - y * size
    inside = (dy[:, None] ** 2 + dx[None, :] ** 2) <= radius * radius
    coverage = inside.reshape(size, supersample, size, supersample).mean(axis=(1, 3))

    image = np.empty((size, size, 3), dtype=np.uint8)
    image[..., 0] = 255
    faded = np.rint(255.0 * (1.0 - coverage)).astype(np.uint8)
    image[..., 1] = faded
    image[..., 2] = faded
    return image


def ink(image: np.ndarray) -> np.ndarray:
    """Red coverage per pixel in [0, 1], read from the green channel deficit"""
    return 1.0 - np.asarray(image, dtype=np.float64)[..., 1] / 255.0


def ink_centroid(image: np.ndarray) -> tuple[float, float]:
    """Intensity centroid (x, y) in pixel units"""
    weights = ink(image)
    total = weights.sum()
    if total <= 0.0:
        raise ValueError("Image has no red pixels")
    centers = np.arange(weights.shape[0]) + 0.5
    x = float((weights.sum(axis=0) * centers).sum() / total)
    y = float((weights.sum(axis=1) * centers).sum() / total)
    return x, y


def save_png(image: np.ndarray, path: Path) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    Image.fromarray(np.ascontiguousarray(image, dtype=np.uint8)).save(path, format='PNG', optimize=False)


def load_png(path: Path) -> np.ndarray:
    with Image.open(path) as img:
        return np.asarray(img.convert('RGB'), dtype=np.uint8)
