"""Beta sweeps over datasets, model comparisons and a fixation sampler."""

from __future__ import annotations

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Mapping, Optional, Sequence

import numpy as np

from .errors import GazeCenterError
from .maps import WeightScheme, build_object_map, combine
from .metrics import TestResult, nss, paired_t_test

log = logging.getLogger(__name__)

DEFAULT_BETAS = tuple(round(0.1 * i, 1) for i in range(11))


@dataclass
class SweepResult:
    """NSS of the combined model for every image and every beta.

    ``per_image_nss[i, j]`` scores image ``image_ids[i]`` at ``betas[j]``.
    Images without objects are kept out of the matrix; their saliency-only
    score is in ``saliency_only``.
    """

    betas: np.ndarray
    image_ids: list[str]
    per_image_nss: np.ndarray
    mean_nss: np.ndarray
    sem: np.ndarray
    beta_opt: float
    config: dict = field(default_factory=dict)
    saliency_only: dict = field(default_factory=dict)

    @property
    def best_index(self) -> int:
        return int(np.argmax(self.mean_nss))

    def column(self, beta) -> np.ndarray:
        j = int(np.flatnonzero(np.isclose(self.betas, beta))[0])
        return self.per_image_nss[:, j]

    def to_dict(self) -> dict:
        return {
            "betas": [float(b) for b in self.betas],
            "mean_nss": [float(v) for v in self.mean_nss],
            "sem": [float(v) for v in self.sem],
            "beta_opt": float(self.beta_opt),
            "image_ids": list(self.image_ids),
            "per_image_nss": [[float(v) for v in row] for row in self.per_image_nss],
            "saliency_only": {k: float(v) for k, v in self.saliency_only.items()},
            "config": dict(self.config),
        }


@dataclass(frozen=True)
class ComparisonResult:
    win_rate_a_over_b: float
    tie_count: int
    n: int
    test: TestResult

    def to_dict(self) -> dict:
        t = self.test
        return {
            "n": self.n,
            "win_rate_a_over_b": self.win_rate_a_over_b,
            "tie_count": self.tie_count,
            "t_statistic": t.t_statistic,
            "p_value": t.p_value,
            "mean_diff": t.mean_diff,
            "sem": t.sem,
        }


def check_betas(betas) -> np.ndarray:
    betas = np.asarray(betas, dtype=float).ravel()
    if len(betas) == 0:
        raise GazeCenterError("INVALID_BETAS", "empty beta grid")
    if (betas < 0).any() or (betas > 1).any():
        raise GazeCenterError("BETA_OUT_OF_RANGE", "betas must lie in [0, 1]")
    if (np.diff(betas) <= 0).any():
        raise GazeCenterError("INVALID_BETAS", "betas must be strictly increasing")
    return betas


def nss_curve(S, O, points, betas=DEFAULT_BETAS) -> np.ndarray:
    """NSS of ``combine(S, O, beta)`` at ``points`` for each beta."""
    return np.array([nss(combine(S, O, b).grid, points) for b in betas])


def summarize(image_ids, matrix, betas, config=None, saliency_only=None) -> SweepResult:
    matrix = np.asarray(matrix, dtype=float).reshape(len(image_ids), len(betas))
    if len(image_ids) == 0:
        raise GazeCenterError("EMPTY_DATASET", "no image could be scored at every beta")
    mean = matrix.mean(axis=0)
    if len(image_ids) > 1:
        sem = matrix.std(axis=0, ddof=1) / np.sqrt(len(image_ids))
    else:
        sem = np.zeros(len(betas))
    # argmax returns the first maximum, i.e. the smallest beta on ties
    beta_opt = float(betas[int(np.argmax(mean))])
    return SweepResult(
        np.asarray(betas, dtype=float), list(image_ids), matrix, mean, sem, beta_opt,
        dict(config or {}), dict(saliency_only or {}),
    )


def sweep_maps(items, betas=DEFAULT_BETAS, config=None) -> SweepResult:
    """Sweep over precomputed maps.

    ``items`` yields ``(image_id, S, O, points)`` with normalized ``S`` and
    ``O`` of equal shape.
    """
    betas = check_betas(betas)
    ids, rows = [], []
    for image_id, S, O, pts in items:
        ids.append(image_id)
        rows.append(nss_curve(S, O, pts, betas))
    return summarize(ids, rows, betas, config)


def sweep_beta(
    images,
    fixations,
    saliency: Mapping[str, np.ndarray],
    scheme: Optional[WeightScheme] = None,
    region_mode: str = "polygon",
    betas: Sequence[float] = DEFAULT_BETAS,
    k: int = 10,
    source_id: str = "external",
    workers: Optional[int] = None,
) -> SweepResult:
    """Score the combined model on every image for every beta.

    Parameters
    ----------
    images : list of ImageAnnotation
    fixations : FixationSet
    saliency : mapping of image id to normalized saliency map
    scheme, region_mode, k
        Object map configuration (see :func:`gazecenter.maps.build_object_map`).
    betas : increasing sequence in [0, 1]
    workers : int, optional
        Thread count for per-image work; results do not depend on it.

    Images with fixations but no objects are scored at beta = 0 only and
    reported in ``SweepResult.saliency_only``.
    """
    scheme = scheme or WeightScheme()
    betas = check_betas(betas)
    per_image = fixations.by_image()
    todo = [img for img in images if img.image_id in per_image]
    if not todo:
        raise GazeCenterError("EMPTY_DATASET", "no annotated image has fixations")
    for img in todo:
        if img.image_id not in saliency:
            raise GazeCenterError("MISSING_SALIENCY", img.image_id)

    def work(img):
        S = np.asarray(saliency[img.image_id], dtype=float)
        if (S.shape[1], S.shape[0]) != img.dims:
            raise GazeCenterError("DIM_MISMATCH", f"saliency map for {img.image_id!r} has wrong size")
        pts = per_image[img.image_id]
        if not img.objects:
            return img.image_id, None, nss(S, pts)
        O = build_object_map(img, scheme, region_mode, k)
        return img.image_id, nss_curve(S, O, pts, betas), None

    if workers and workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(work, todo))
    else:
        results = [work(img) for img in todo]

    ids, rows, sal_only = [], [], {}
    for image_id, curve, s_only in results:
        if curve is None:
            log.warning("image %s has no objects; scored at beta=0 only", image_id)
            sal_only[image_id] = s_only
        else:
            ids.append(image_id)
            rows.append(curve)
    config = {
        "scheme": scheme.kind,
        "gaussian_sigma_rings": scheme.gaussian_sigma_rings,
        "region_mode": region_mode,
        "k": k,
        "saliency_source": source_id,
    }
    return summarize(ids, rows, betas, config, sal_only)


def compare_models(scores_a, scores_b) -> ComparisonResult:
    """Per-image wins of model A over model B plus a paired t-test."""
    a = np.asarray(scores_a, dtype=float).ravel()
    b = np.asarray(scores_b, dtype=float).ravel()
    if len(a) != len(b):
        raise GazeCenterError("LENGTH_MISMATCH", f"{len(a)} vs {len(b)} scores")
    test = paired_t_test(a, b)
    wins = int((a > b).sum())
    ties = int((a == b).sum())
    return ComparisonResult(wins / len(a), ties, len(a), test)


def sample_fixations(grid, n: int, seed=None) -> np.ndarray:
    """Draw ``n`` pixel centers with probability given by a normalized map.

    Returns an ``(n, 2)`` array of ``(x, y)``. Identical seeds give identical
    draws.
    """
    grid = np.asarray(grid, dtype=float)
    if grid.ndim != 2 or (grid < 0).any() or not np.isfinite(grid).all() or abs(grid.sum() - 1.0) > 1e-6:
        raise GazeCenterError("UNNORMALIZED_MAP", "sampling needs a non-negative map summing to 1")
    if n < 1:
        raise GazeCenterError("INVALID_COUNT", f"n must be >= 1, got {n}")
    rng = np.random.default_rng(seed)
    flat = grid.ravel()
    idx = rng.choice(flat.size, size=int(n), p=flat / flat.sum())
    rows, cols = np.divmod(idx, grid.shape[1])
    return np.column_stack([cols + 0.5, rows + 0.5])
