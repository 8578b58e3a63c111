"""Bottom-up saliency sources.

Externally computed maps (any model, saved in one of the map formats) are the
intended input. :func:`builtin_saliency` is a small multiscale center-surround
contrast model so the pipeline can run without one.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .dataset import read_map
from .errors import GazeCenterError
from .maps import resample_bilinear

BOX_RADII = (2, 4, 8)
IMAGE_SUFFIXES = (".png", ".ppm", ".pnm", ".jpg", ".jpeg")


@dataclass(frozen=True)
class SaliencySource:
    kind: str
    id: str

    def __post_init__(self):
        if self.kind not in ("external", "builtin"):
            raise GazeCenterError("INVALID_SOURCE", f"unknown saliency source kind {self.kind!r}")
        if not self.id:
            raise GazeCenterError("INVALID_SOURCE", "saliency source id must be non-empty")


def prepare_saliency(grid, expected_dims=None, resample=True) -> np.ndarray:
    """Shift negative maps to a zero minimum, resize, normalize to sum 1."""
    grid = np.asarray(grid, dtype=float)
    if not np.isfinite(grid).all():
        raise GazeCenterError("INVALID_GRID", "saliency map has non-finite values")
    if grid.min() < 0:
        grid = grid - grid.min()
    if grid.max() == grid.min():
        raise GazeCenterError("ALL_ZERO", "saliency map is constant")
    if expected_dims is not None and (grid.shape[1], grid.shape[0]) != tuple(expected_dims):
        if not resample:
            raise GazeCenterError(
                "DIM_MISMATCH", f"map is {grid.shape[1]}x{grid.shape[0]}, expected {tuple(expected_dims)}"
            )
        grid = resample_bilinear(grid, expected_dims)
    return grid / grid.sum()


def load_external_saliency(path, expected_dims=None, resample=True, fmt=None) -> np.ndarray:
    """Load a precomputed saliency map and bring it to ``expected_dims``.

    Parameters
    ----------
    path : path-like
        Map file (``.smap``, ``.csv`` or ``.pgm``).
    expected_dims : (width, height), optional
        Target size. When the file differs the map is resampled bilinearly,
        or ``DIM_MISMATCH`` is raised if ``resample`` is false.

    Raises
    ------
    GazeCenterError
        ``ALL_ZERO`` for constant maps, which carry no information.
    """
    return prepare_saliency(read_map(path, fmt), expected_dims, resample)


def read_image(path) -> np.ndarray:
    """8-bit RGB image as a ``(height, width, 3)`` uint8 array."""
    from PIL import Image

    with Image.open(path) as im:
        return np.asarray(im.convert("RGB"), dtype=np.uint8)


def find_image(image_dir, image_id):
    for suffix in IMAGE_SUFFIXES:
        p = Path(image_dir) / f"{image_id}{suffix}"
        if p.exists():
            return p
    raise GazeCenterError("MISSING_IMAGE", f"no image file for {image_id!r} in {image_dir}")


def opponent_channels(image) -> np.ndarray:
    """Intensity, red-green and blue-yellow channels, ``(3, height, width)``."""
    img = np.asarray(image)
    if img.size == 0:
        raise GazeCenterError("EMPTY_IMAGE", "image has no pixels")
    if img.dtype == np.uint8:
        img = img.astype(float) / 255.0
    else:
        img = img.astype(float)
    if img.ndim == 2:
        img = np.repeat(img[:, :, None], 3, axis=2)
    r, g, b = img[..., 0], img[..., 1], img[..., 2]
    return np.stack([(r + g + b) / 3.0, r - g, b - (r + g) / 2.0])


def box_mean(channel, radius: int) -> np.ndarray:
    """Mean over the ``(2r+1)^2`` window around each pixel, edges clamped.

    Uses a summed-area table over the edge-replicated channel.
    """
    padded = np.pad(channel, radius, mode="edge")
    sat = np.zeros((padded.shape[0] + 1, padded.shape[1] + 1))
    sat[1:, 1:] = padded.cumsum(0).cumsum(1)
    h, w = channel.shape
    d = 2 * radius + 1
    total = sat[d : d + h, d : d + w] - sat[:h, d : d + w] - sat[d : d + h, :w] + sat[:h, :w]
    return total / (d * d)


def builtin_saliency(image, radii=BOX_RADII) -> np.ndarray:
    """Center-surround contrast summed over channels and box radii.

    For each opponent channel and each radius ``s`` the response is
    ``|value - box_mean_s(value)|``. The summed response is normalized to
    sum 1; an image without contrast yields the uniform map.
    """
    channels = opponent_channels(image)
    resp = np.zeros(channels.shape[1:])
    for ch in channels:
        for s in radii:
            resp += np.abs(ch - box_mean(ch, s))
    total = resp.sum()
    if not total > 1e-12 * resp.size:
        warnings.warn("image has no contrast; returning a uniform saliency map")
        return np.full(resp.shape, 1.0 / resp.size)
    return resp / total
