"""Scoring: NSS, per-ring fixation and saliency profiles, paired t-tests."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple, Optional

import numpy as np

from .errors import GazeCenterError


class NSSResult(NamedTuple):
    score: float
    n_used: int
    n_dropped: int


def _pixel_indices(points, dims):
    pts = np.asarray(points, dtype=float).reshape(-1, 2)
    width, height = dims
    cols = np.floor(pts[:, 0])
    rows = np.floor(pts[:, 1])
    ok = (cols >= 0) & (cols < width) & (rows >= 0) & (rows < height)
    return rows[ok].astype(np.int64), cols[ok].astype(np.int64), int((~ok).sum())


def nss_detail(grid, points) -> NSSResult:
    """NSS plus the number of fixations used and dropped as out of bounds."""
    grid = np.asarray(grid, dtype=float)
    rows, cols, dropped = _pixel_indices(points, (grid.shape[1], grid.shape[0]))
    if len(rows) == 0:
        raise GazeCenterError("NO_IN_BOUNDS_FIXATIONS", "no fixation falls inside the map")
    std = grid.std()
    if std == 0:
        return NSSResult(0.0, len(rows), dropped)
    z = (grid[rows, cols] - grid.mean()) / std
    return NSSResult(float(z.mean()), len(rows), dropped)


def nss(grid, points) -> float:
    """Normalized scanpath saliency of ``grid`` at fixation ``points``.

    The map is z-scored with its population standard deviation and the
    z-values under each in-bounds fixation are averaged. A constant map
    scores 0.
    """
    return nss_detail(grid, points).score


@dataclass(frozen=True)
class RingProfile:
    """Fixation density per ring, plus the center-bias index.

    ``p[i]`` is the share of the object's fixations landing in ring ``i + 1``.
    ``obj_cnt_idx`` is the share held by the inner ``ceil(k / 2)`` rings:
    0.5 when fixations spread evenly, above 0.5 when they favour the center.
    """

    p: np.ndarray
    counts: np.ndarray
    n_fix: int
    obj_cnt_idx: float
    mean_sal: Optional[np.ndarray] = None


def center_bias_index(p) -> float:
    p = np.asarray(p, dtype=float)
    inner = math.ceil(len(p) / 2)
    return float(p[:inner].sum() / p.sum())


def ring_fixation_profile(part, fixations, saliency=None) -> RingProfile:
    """Count the fixations falling in each ring of ``part``.

    Fixations outside the object are ignored. Raises
    ``NO_OBJECT_FIXATIONS`` when none land on it, since the profile is then
    undefined rather than zero.
    """
    rows, cols, _ = _pixel_indices(fixations, part.pixel_set.dims)
    ring = part.index_grid()[rows, cols]
    ring = ring[ring > 0]
    if len(ring) == 0:
        raise GazeCenterError("NO_OBJECT_FIXATIONS", "no fixation lands on the object")
    counts = np.bincount(ring, minlength=part.k + 1)[1:]
    p = counts / counts.sum()
    mean_sal = ring_saliency_profile(part, saliency) if saliency is not None else None
    return RingProfile(p, counts, int(counts.sum()), center_bias_index(p), mean_sal)


def ring_saliency_profile(part, grid) -> np.ndarray:
    """Mean map value over each ring's pixels (NaN for an empty ring)."""
    grid = np.asarray(grid, dtype=float)
    w, h = part.pixel_set.dims
    if grid.shape != (h, w):
        raise GazeCenterError(
            "DIM_MISMATCH", f"map is {grid.shape[1]}x{grid.shape[0]}, partition image is {w}x{h}"
        )
    px = part.pixel_set.pixels
    vals = grid[px[:, 1], px[:, 0]]
    sums = np.bincount(part.ring_of, weights=vals, minlength=part.k + 1)[1:]
    counts = part.ring_counts()
    with np.errstate(invalid="ignore", divide="ignore"):
        return np.where(counts > 0, sums / np.maximum(counts, 1), np.nan)


# -- paired t-test ---------------------------------------------------------------


@dataclass(frozen=True)
class TestResult:
    __test__ = False

    t_statistic: float
    p_value: float
    n: int
    mean_diff: float
    sem: float


_BETACF_RTOL = 1e-15
_BETACF_MAXITER = 10_000
_TINY = 1e-300


def _betacf(a, b, x):
    # modified Lentz evaluation of the incomplete beta continued fraction
    qab, qap, qam = a + b, a + 1.0, a - 1.0
    c = 1.0
    d = 1.0 - qab * x / qap
    if abs(d) < _TINY:
        d = _TINY
    d = 1.0 / d
    h = d
    for m in range(1, _BETACF_MAXITER + 1):
        m2 = 2 * m
        aa = m * (b - m) * x / ((qam + m2) * (a + m2))
        d = 1.0 + aa * d
        if abs(d) < _TINY:
            d = _TINY
        c = 1.0 + aa / c
        if abs(c) < _TINY:
            c = _TINY
        d = 1.0 / d
        h *= d * c
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2))
        d = 1.0 + aa * d
        if abs(d) < _TINY:
            d = _TINY
        c = 1.0 + aa / c
        if abs(c) < _TINY:
            c = _TINY
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < _BETACF_RTOL:
            return h
    raise ArithmeticError("incomplete beta continued fraction did not converge")


def betainc_regularized(a: float, b: float, x: float) -> float:
    """Regularized incomplete beta function ``I_x(a, b)`` for a, b > 0."""
    if not 0.0 <= x <= 1.0:
        raise ValueError("x must lie in [0, 1]")
    if x == 0.0 or x == 1.0:
        return x
    log_front = (
        math.lgamma(a + b) - math.lgamma(a) - math.lgamma(b)
        + a * math.log(x) + b * math.log1p(-x)
    )
    front = math.exp(log_front)
    # the fraction converges fast only on this side of the mean
    if x < (a + 1.0) / (a + b + 2.0):
        return front * _betacf(a, b, x) / a
    return 1.0 - front * _betacf(b, a, 1.0 - x) / b


def student_t_sf2(t: float, df: float) -> float:
    """Two-sided tail probability ``P(|T| >= |t|)`` with ``df`` degrees of freedom."""
    if math.isinf(t):
        return 0.0
    return betainc_regularized(df / 2.0, 0.5, df / (df + t * t))


def paired_t_test(a, b) -> TestResult:
    """Two-tailed paired t-test on ``a - b``.

    All-zero differences give ``t = 0, p = 1``; constant non-zero differences
    give an infinite ``t`` and ``p = 0``.
    """
    a = np.asarray(a, dtype=float).ravel()
    b = np.asarray(b, dtype=float).ravel()
    if len(a) != len(b):
        raise GazeCenterError("LENGTH_MISMATCH", f"{len(a)} vs {len(b)} samples")
    n = len(a)
    if n < 2:
        raise GazeCenterError("TOO_FEW_SAMPLES", f"need at least 2 pairs, got {n}")
    d = a - b
    mean = float(d.mean())
    sd = float(d.std(ddof=1))
    # spread at rounding level (e.g. b + 0.1 - b) counts as zero variance
    scale = float(np.max(np.abs(np.concatenate([a, b]))))
    if sd <= 16 * np.finfo(float).eps * scale:
        if np.all(d == 0.0):
            return TestResult(0.0, 1.0, n, 0.0, 0.0)
        return TestResult(math.copysign(math.inf, mean), 0.0, n, mean, 0.0)
    sem = sd / math.sqrt(n)
    t = mean / sem
    p = min(1.0, max(0.0, student_t_sf2(t, n - 1)))
    return TestResult(t, p, n, mean, sem)
