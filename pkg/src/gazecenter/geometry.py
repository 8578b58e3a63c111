"""Object regions on the pixel grid: rasterization, center of mass, rings.

Coordinates follow the image convention: ``x`` is the column, ``y`` the row,
and pixel ``(col, row)`` covers the unit cell ``[col, col+1) x [row, row+1)``.
Polygon vertices live in that continuous frame; a pixel belongs to a polygon
when its center ``(col + 0.5, row + 0.5)`` does.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import NamedTuple, Sequence

import numpy as np

from .errors import GazeCenterError

REGION_MODES = ("polygon", "bbox")


class Point(NamedTuple):
    x: float
    y: float


@dataclass(frozen=True)
class Polygon:
    """Closed polygon given by its vertices in pixel units (>= 3 of them)."""

    vertices: tuple[Point, ...]

    def __init__(self, vertices: Sequence[Sequence[float]]):
        pts = tuple(Point(float(v[0]), float(v[1])) for v in vertices)
        if len(pts) < 3:
            raise GazeCenterError(
                "FEWER_THAN_3_VERTICES", f"polygon has {len(pts)} vertices"
            )
        if not all(math.isfinite(p.x) and math.isfinite(p.y) for p in pts):
            raise GazeCenterError("INVALID_POLYGON", "non-finite vertex")
        object.__setattr__(self, "vertices", pts)

    def as_array(self) -> np.ndarray:
        return np.array(self.vertices, dtype=float)

    def bounds(self):
        """``(xmin, ymin, xmax, ymax)`` of the vertices."""
        v = self.as_array()
        return v[:, 0].min(), v[:, 1].min(), v[:, 0].max(), v[:, 1].max()


@dataclass(frozen=True, eq=False)
class PixelSet:
    """Non-empty set of pixels inside an image of size ``dims = (width, height)``.

    ``pixels`` is an ``(N, 2)`` integer array of ``(col, row)`` pairs kept in
    row-major order (by row, then column), without duplicates.
    """

    dims: tuple[int, int]
    pixels: np.ndarray

    def __post_init__(self):
        px = np.asarray(self.pixels, dtype=np.int64).reshape(-1, 2)
        if len(px) == 0:
            raise GazeCenterError("EMPTY_SET", "pixel set is empty")
        w, h = self.dims
        if (px[:, 0] < 0).any() or (px[:, 0] >= w).any() or (px[:, 1] < 0).any() or (px[:, 1] >= h).any():
            raise GazeCenterError("OUT_OF_BOUNDS", "pixel outside image bounds")
        flat = np.unique(px[:, 1] * w + px[:, 0])
        px = np.column_stack([flat % w, flat // w])
        px.setflags(write=False)
        object.__setattr__(self, "dims", (int(w), int(h)))
        object.__setattr__(self, "pixels", px)

    @classmethod
    def from_mask(cls, mask: np.ndarray) -> "PixelSet":
        """Build from a boolean ``(height, width)`` array."""
        mask = np.asarray(mask, dtype=bool)
        rows, cols = np.nonzero(mask)
        return cls((mask.shape[1], mask.shape[0]), np.column_stack([cols, rows]))

    def __len__(self):
        return len(self.pixels)

    def __eq__(self, other):
        if not isinstance(other, PixelSet):
            return NotImplemented
        return self.dims == other.dims and np.array_equal(self.pixels, other.pixels)

    def __hash__(self):
        return hash((self.dims, self.pixels.tobytes()))

    def as_set(self) -> set[tuple[int, int]]:
        return {(int(c), int(r)) for c, r in self.pixels}

    def mask(self) -> np.ndarray:
        w, h = self.dims
        m = np.zeros((h, w), dtype=bool)
        m[self.pixels[:, 1], self.pixels[:, 0]] = True
        return m


@dataclass(frozen=True, eq=False)
class RingPartition:
    """Concentric equal-count rings of a pixel set around ``center``.

    ``ring_of[j]`` is the 1-based ring of ``pixel_set.pixels[j]``;
    ``radii[i - 1]`` is the largest center distance found in ring ``i``.
    """

    pixel_set: PixelSet
    center: Point
    k: int
    ring_of: np.ndarray
    radii: np.ndarray
    distances: np.ndarray = field(repr=False)

    def ring_counts(self) -> np.ndarray:
        return np.bincount(self.ring_of, minlength=self.k + 1)[1:]

    def ring_pixels(self, i: int) -> np.ndarray:
        """``(col, row)`` pixels of ring ``i`` (1-based), row-major order."""
        return self.pixel_set.pixels[self.ring_of == i]

    def index_grid(self) -> np.ndarray:
        """``(height, width)`` int array: ring number inside the set, 0 elsewhere."""
        w, h = self.pixel_set.dims
        grid = np.zeros((h, w), dtype=np.int64)
        px = self.pixel_set.pixels
        grid[px[:, 1], px[:, 0]] = self.ring_of
        return grid


def _scanline_fill(verts: np.ndarray, width: int, height: int) -> np.ndarray:
    # even-odd test at pixel centers; an edge crosses row center y when exactly
    # one endpoint lies strictly above y (half-open in y), and a center at x is
    # inside when an odd number of crossings lie strictly to its right.
    x0, y0 = verts[:, 0], verts[:, 1]
    x1, y1 = np.roll(x0, -1), np.roll(y0, -1)
    mask = np.zeros((height, width), dtype=bool)
    ymin, ymax = verts[:, 1].min(), verts[:, 1].max()
    r_lo = max(0, int(math.floor(ymin - 0.5)))
    r_hi = min(height - 1, int(math.ceil(ymax - 0.5)))
    centers_x = np.arange(width) + 0.5
    for row in range(r_lo, r_hi + 1):
        yc = row + 0.5
        hit = (y0 > yc) != (y1 > yc)
        if not hit.any():
            continue
        xa, ya, xb, yb = x0[hit], y0[hit], x1[hit], y1[hit]
        xs = np.sort(xa + (yc - ya) * (xb - xa) / (yb - ya))
        right = len(xs) - np.searchsorted(xs, centers_x, side="right")
        mask[row] = (right % 2) == 1
    return mask


def rasterize_polygon(polygon, dims, mode: str = "polygon") -> PixelSet:
    """Pixels of a ``width x height`` image covered by ``polygon``.

    Parameters
    ----------
    polygon : Polygon or sequence of (x, y)
        Object outline in pixel units.
    dims : (int, int)
        Image ``(width, height)``.
    mode : {"polygon", "bbox"}
        ``"polygon"`` keeps pixels whose centers are inside by the even-odd
        rule. ``"bbox"`` keeps every pixel whose center lies in the closed
        axis-aligned bounding box of the vertices.

    Raises
    ------
    GazeCenterError
        ``FEWER_THAN_3_VERTICES``; ``OUT_OF_BOUNDS`` when the vertex bounding
        box misses the image entirely; ``EMPTY_RASTER`` when no pixel center
        is covered.
    """
    if not isinstance(polygon, Polygon):
        polygon = Polygon(polygon)
    width, height = int(dims[0]), int(dims[1])
    if width <= 0 or height <= 0:
        raise GazeCenterError("INVALID_DIMS", f"dims must be positive, got {dims}")
    if mode not in REGION_MODES:
        raise GazeCenterError("INVALID_MODE", f"unknown region mode {mode!r}")

    xmin, ymin, xmax, ymax = polygon.bounds()
    if xmax < 0 or ymax < 0 or xmin > width or ymin > height:
        raise GazeCenterError("OUT_OF_BOUNDS", "polygon does not intersect the image")

    if mode == "bbox":
        cols = np.arange(width) + 0.5
        rows = np.arange(height) + 0.5
        mask = ((rows >= ymin) & (rows <= ymax))[:, None] & ((cols >= xmin) & (cols <= xmax))[None, :]
    else:
        mask = _scanline_fill(polygon.as_array(), width, height)

    if not mask.any():
        raise GazeCenterError("EMPTY_RASTER", "polygon encloses no pixel center")
    return PixelSet.from_mask(mask)


def center_of_mass(ps: PixelSet) -> Point:
    """Mean column and mean row of the pixels."""
    if ps is None or len(ps) == 0:
        raise GazeCenterError("EMPTY_SET", "center of mass of an empty set")
    px = ps.pixels.astype(float)
    return Point(float(px[:, 0].mean()), float(px[:, 1].mean()))


def ring_partition(ps: PixelSet, center=None, k: int = 10) -> RingPartition:
    """Split ``ps`` into ``k`` rings holding equal shares of its area.

    Pixels are ranked by Euclidean distance from ``center`` (defaults to the
    center of mass), ties resolved by row-major order, and rank ``r``
    (1-based) goes to ring ``ceil(r * k / N)``. Ring sizes therefore differ
    by at most one pixel.
    """
    if ps is None or len(ps) == 0:
        raise GazeCenterError("EMPTY_SET", "cannot partition an empty set")
    if int(k) != k or k < 1:
        raise GazeCenterError("K_NONPOSITIVE", f"ring count must be >= 1, got {k}")
    k = int(k)
    center = center_of_mass(ps) if center is None else Point(*center)

    px = ps.pixels.astype(float)
    dist = np.hypot(px[:, 0] - center.x, px[:, 1] - center.y)
    order = np.argsort(dist, kind="stable")
    n = len(ps)
    rank = np.arange(1, n + 1)
    ring_of = np.empty(n, dtype=np.int64)
    ring_of[order] = (rank * k + n - 1) // n

    radii = np.zeros(k)
    running = 0.0
    for i in range(1, k + 1):
        sel = dist[ring_of == i]
        if len(sel):
            running = max(running, float(sel.max()))
        radii[i - 1] = running
    ring_of.setflags(write=False)
    radii.setflags(write=False)
    dist.setflags(write=False)
    return RingPartition(ps, center, k, ring_of, radii, dist)
