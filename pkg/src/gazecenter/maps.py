"""Dense maps: object center-bias maps, fixation maps and their combination.

Every map is a plain ``(height, width)`` float64 numpy array of non-negative
values. Builders return maps normalized to sum to one.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import ndimage

from .errors import GazeCenterError
from .geometry import center_of_mass, rasterize_polygon, ring_partition

SCHEMES = ("linear", "constant", "gaussian")


@dataclass(frozen=True)
class WeightScheme:
    """How ring ``i`` of ``k`` is weighted inside an object.

    ``linear`` gives ``(k + 1 - i) / k``, ``constant`` gives 1 and
    ``gaussian`` gives ``exp(-(i - 1)^2 / (2 sigma^2))`` with sigma measured
    in rings.
    """

    kind: str = "linear"
    gaussian_sigma_rings: float = 3.0

    def __post_init__(self):
        if self.kind not in SCHEMES:
            raise GazeCenterError("INVALID_SCHEME", f"unknown weighting {self.kind!r}")
        if not self.gaussian_sigma_rings > 0:
            raise GazeCenterError("INVALID_SCHEME", "gaussian sigma must be > 0")

    def ring_weights(self, k: int) -> np.ndarray:
        i = np.arange(1, k + 1, dtype=float)
        if self.kind == "linear":
            return (k + 1 - i) / k
        if self.kind == "constant":
            return np.ones(k)
        return np.exp(-((i - 1) ** 2) / (2.0 * self.gaussian_sigma_rings**2))


@dataclass(frozen=True)
class CombinedMap:
    grid: np.ndarray
    beta: float
    provenance: dict = field(default_factory=dict)


def normalize(grid) -> np.ndarray:
    """Scale a non-negative grid to sum 1."""
    grid = np.asarray(grid, dtype=float)
    total = grid.sum()
    if not total > 0:
        raise GazeCenterError("ALL_ZERO", "cannot normalize a map with zero mass")
    return grid / total


def object_weight_map(img, scheme: WeightScheme, region_mode="polygon", k=10) -> np.ndarray:
    """Un-normalized object map: per-pixel ring weight, max over objects."""
    if not img.objects:
        raise GazeCenterError("NO_OBJECTS", f"image {img.image_id!r} has no objects")
    width, height = img.dims
    weights = np.concatenate([[0.0], scheme.ring_weights(k)])
    out = np.zeros((height, width))
    for obj in img.objects:
        ps = rasterize_polygon(obj.polygon, img.dims, region_mode)
        part = ring_partition(ps, center_of_mass(ps), k)
        px = ps.pixels
        vals = weights[part.ring_of]
        cur = out[px[:, 1], px[:, 0]]
        out[px[:, 1], px[:, 0]] = np.maximum(cur, vals)
    return out


def build_object_map(img, scheme=None, region_mode="polygon", k=10) -> np.ndarray:
    """Object center-bias map of one annotated image.

    Each object is rasterized (polygon or bounding box), split into ``k``
    equal-area rings around its center of mass and painted with the scheme's
    ring weights. Overlapping objects keep the larger weight. Pixels outside
    all objects are zero. The result sums to one.
    """
    scheme = scheme or WeightScheme()
    return normalize(object_weight_map(img, scheme, region_mode, k))


def gaussian_kernel(sigma: float) -> np.ndarray:
    """1-D Gaussian truncated at ``ceil(3 sigma)`` and normalized to sum 1."""
    radius = int(math.ceil(3 * sigma))
    x = np.arange(-radius, radius + 1, dtype=float)
    with np.errstate(over="ignore"):
        kern = np.exp(-0.5 * (x / sigma) ** 2)
    return kern / kern.sum()


def smooth_map(grid, sigma_px: float) -> np.ndarray:
    """Separable Gaussian blur with zero padding, rescaled to the input's sum."""
    if sigma_px < 0:
        raise GazeCenterError("NEGATIVE_SIGMA", f"sigma must be >= 0, got {sigma_px}")
    grid = np.asarray(grid, dtype=float)
    if sigma_px == 0:
        return grid.copy()
    kern = gaussian_kernel(sigma_px)
    out = ndimage.convolve1d(grid, kern, axis=0, mode="constant", cval=0.0)
    out = ndimage.convolve1d(out, kern, axis=1, mode="constant", cval=0.0)
    total_in, total_out = grid.sum(), out.sum()
    if total_out > 0:
        out *= total_in / total_out
    return out


def fixation_histogram(points, dims) -> np.ndarray:
    """Counts of in-bounds points per pixel, ``(height, width)``."""
    width, height = dims
    pts = np.asarray(points, dtype=float).reshape(-1, 2)
    cols = np.floor(pts[:, 0])
    rows = np.floor(pts[:, 1])
    ok = (cols >= 0) & (cols < width) & (rows >= 0) & (rows < height)
    hist = np.zeros((height, width))
    np.add.at(hist, (rows[ok].astype(np.int64), cols[ok].astype(np.int64)), 1.0)
    return hist


def build_fixation_map(points, dims, sigma_px: float = 0.0) -> np.ndarray:
    """Smoothed, normalized fixation histogram for one image."""
    hist = fixation_histogram(points, dims)
    if not hist.any():
        raise GazeCenterError("NO_IN_BOUNDS_FIXATIONS", "no fixation falls inside the image")
    return normalize(smooth_map(hist, sigma_px))


def combine(S, O, beta: float, provenance=None) -> CombinedMap:
    """Convex blend ``(1 - beta) * S + beta * O`` of two normalized maps."""
    S = np.asarray(S, dtype=float)
    O = np.asarray(O, dtype=float)
    if S.shape != O.shape:
        raise GazeCenterError("DIM_MISMATCH", f"saliency {S.shape} vs object map {O.shape}")
    beta = float(beta)
    if not 0.0 <= beta <= 1.0:
        raise GazeCenterError("BETA_OUT_OF_RANGE", f"beta must be in [0, 1], got {beta}")
    grid = (1.0 - beta) * S + beta * O
    return CombinedMap(grid, beta, dict(provenance or {}))


def resample_bilinear(grid, dims) -> np.ndarray:
    """Resize to ``dims = (width, height)`` by bilinear interpolation.

    Pixel centers are aligned (``src = (dst + 0.5) * n_src / n_dst - 0.5``)
    and source coordinates are clamped to the grid.
    """
    grid = np.asarray(grid, dtype=float)
    h_src, w_src = grid.shape
    w_dst, h_dst = int(dims[0]), int(dims[1])

    def axis(n_src, n_dst):
        s = (np.arange(n_dst) + 0.5) * n_src / n_dst - 0.5
        s = np.clip(s, 0, n_src - 1)
        i0 = np.floor(s).astype(np.int64)
        i1 = np.minimum(i0 + 1, n_src - 1)
        return i0, i1, s - i0

    r0, r1, fr = axis(h_src, h_dst)
    c0, c1, fc = axis(w_src, w_dst)
    top = grid[r0][:, c0] * (1 - fc) + grid[r0][:, c1] * fc
    bot = grid[r1][:, c0] * (1 - fc) + grid[r1][:, c1] * fc
    return top * (1 - fr)[:, None] + bot * fr[:, None]
