"""Acceptance gate.

Each test carries a ``criterion(n)`` marker; a pass/fail line per criterion
is printed in the terminal summary. Criterion 8 needs the OSIE data set:
point ``GAZECENTER_OSIE`` at a directory with ``annotations.json`` and
``fixations.csv`` (and optionally ``saliency/<image_id>.smap``).
"""

import os
import time
from pathlib import Path

import numpy as np
import pytest

from gazecenter.cli import run_cli
from gazecenter.dataset import (
    dataset_stats,
    load_annotations,
    load_fixations,
    read_map,
    save_annotations,
    write_map,
)
from gazecenter.evaluation import DEFAULT_BETAS, sample_fixations, sweep_beta, sweep_maps
from gazecenter.geometry import PixelSet, Polygon, center_of_mass, rasterize_polygon, ring_partition
from gazecenter.maps import WeightScheme, build_object_map, combine
from gazecenter.metrics import center_bias_index, nss, paired_t_test, ring_fixation_profile
from gazecenter.saliency import load_external_saliency

from reference_values import TTEST_CASES
from synthetic import disk_polygon, ellipse_polygon, make_dataset, random_field, random_scene, write_dataset

pytestmark = pytest.mark.acceptance


def criterion(n):
    return pytest.mark.criterion(n)


@criterion(1)
def test_ring_geometry_disk():
    R, k = 100, 10
    start = time.perf_counter()
    ps = rasterize_polygon(disk_polygon(110, 110, R), (220, 220))
    part = ring_partition(ps, center_of_mass(ps), k)
    elapsed = time.perf_counter() - start
    expected = R * np.sqrt(np.arange(1, k + 1) / k)
    assert np.all(np.abs(part.radii - expected) <= 1.5), part.radii - expected
    # every pixel of the set in exactly one ring, nothing else
    assert len(part.ring_of) == len(ps)
    assert set(np.unique(part.ring_of)) == set(range(1, k + 1))
    union = np.concatenate([part.ring_pixels(i) for i in range(1, k + 1)])
    assert PixelSet(ps.dims, union) == ps and len(union) == len(ps)
    counts = part.ring_counts()
    assert counts.max() - counts.min() <= 1
    assert elapsed < 1.0, elapsed


FIXTURE_OBJECTS = {
    "disk": (disk_polygon(40, 40, 30), (80, 80)),
    "ellipse": (ellipse_polygon(50, 30, 40, 12, 0.4), (100, 60)),
    "triangle": (Polygon([(3, 2), (70, 10), (20, 55)]), (80, 60)),
}


@criterion(2)
@pytest.mark.parametrize("name", sorted(FIXTURE_OBJECTS))
def test_uniform_samples_give_half(name):
    poly, dims = FIXTURE_OBJECTS[name]
    ps = rasterize_polygon(poly, dims)
    part = ring_partition(ps, center_of_mass(ps))
    rng = np.random.default_rng(2024)
    which = rng.integers(0, len(ps), size=100_000)
    pts = ps.pixels[which] + rng.uniform(0, 1, size=(100_000, 2))
    prof = ring_fixation_profile(part, pts)
    assert prof.n_fix == 100_000
    assert abs(prof.obj_cnt_idx - 0.5) <= 0.02, prof.obj_cnt_idx


@criterion(3)
def test_nss_oracle():
    grid = np.arange(1.0, 10.0).reshape(3, 3)
    assert abs(nss(grid, [(2.5, 2.5)]) - 1.5492) <= 1e-4
    rng = np.random.default_rng(3)
    for _ in range(100):
        g = rng.uniform(size=(6, 8))
        pts = rng.uniform((0, 0), (8, 6), size=(20, 2))
        a, b = rng.uniform(1e-3, 1e3), rng.uniform(-1e3, 1e3)
        assert abs(nss(a * g + b, pts) - nss(g, pts)) <= 1e-9
    assert nss(np.full((5, 5), 0.04), [(1, 1), (3, 2)]) == 0.0
    scores = [
        nss(rng.uniform(size=(20, 20)), rng.uniform(0, 20, size=(1, 2)))
        for _ in range(10_000)
    ]
    assert abs(np.mean(scores)) < 0.05, np.mean(scores)


@criterion(4)
def test_combination_identities():
    images, fixations, saliency = make_dataset(seed=11, n_images=5, beta=0.5, n_fix=400)
    res = sweep_beta(images, fixations, saliency)
    for i, img in enumerate(images):
        pts = fixations.points(img.image_id)
        S, O = saliency[img.image_id], build_object_map(img)
        assert res.column(0.0)[i] == nss(S, pts)
        assert res.column(1.0)[i] == nss(O, pts)
        for beta in DEFAULT_BETAS:
            assert abs(combine(S, O, beta).grid.sum() - 1.0) <= 1e-9
    rng = np.random.default_rng(4)
    for _ in range(100):
        S = random_field(rng, (16, 20))
        O = random_field(rng, (16, 20), gain=1.0)
        beta = rng.uniform()
        sm = combine(S, O, beta).grid
        assert np.all(sm >= np.minimum(S, O) - 1e-15)
        assert np.all(sm <= np.maximum(S, O) + 1e-15)
        assert abs(sm.sum() - 1.0) <= 1e-9


@criterion(5)
def test_generative_beta_recovery():
    start = time.perf_counter()
    for beta_star in (0.2, 0.5, 0.8):
        hits = 0
        for seed in range(20):
            rng = np.random.default_rng([int(beta_star * 10), seed])
            img = random_scene(rng, "scene", n_objects=3)
            S = random_field(rng, (48, 64))
            O = build_object_map(img)
            assert np.corrcoef(S.ravel(), O.ravel())[0, 1] < 0.5
            mixed = combine(S, O, beta_star).grid
            pts = sample_fixations(mixed, 2000, seed=seed)
            res = sweep_maps([("scene", S, O, pts)])
            hits += abs(res.beta_opt - beta_star) <= 0.1 + 1e-9
            assert nss(mixed, pts) >= max(nss(S, pts), nss(O, pts))
        assert hits >= 16, (beta_star, hits)
    assert time.perf_counter() - start < 30.0


@criterion(6)
def test_t_test_oracle():
    assert len(TTEST_CASES) == 5
    for name, a, b, t, p in TTEST_CASES:
        res = paired_t_test(a, b)
        assert abs(res.t_statistic - t) <= 1e-6, name
        assert abs(res.p_value - p) <= 1e-6, name
    assert paired_t_test([1.0, 2.0, 3.0], [1.0, 2.0, 3.0]).p_value == 1.0
    b = np.array([0.7, 1.3, 0.2, 2.1, 1.1])
    assert paired_t_test(b + 0.1, b).p_value == 0.0


@criterion(7)
def test_linear_scheme_beats_constant():
    for seed in range(10):
        images, fixations, saliency = make_dataset(seed=100 + seed, n_images=5, beta=0.6, n_fix=1000)
        lin = sweep_beta(images, fixations, saliency, WeightScheme("linear"))
        const = sweep_beta(images, fixations, saliency, WeightScheme("constant"))
        assert lin.mean_nss.max() >= const.mean_nss.max(), seed


@criterion(8)
def test_osie_statistics():
    root = os.environ.get("GAZECENTER_OSIE")
    if not root:
        pytest.skip("GAZECENTER_OSIE not set; OSIE data not available")
    root = Path(root)
    images = load_annotations(root / "annotations.json")
    fixations = load_fixations(root / "fixations.csv")
    stats = dataset_stats(images, fixations)
    assert round(100 * stats.share_of_small_objects(0.10), 2) == 87.01
    assert round(stats.mean_objects_per_image, 2) == 7.93
    assert stats.median_objects_per_image == 7
    assert stats.total_fixations == 98_321
    per_image = fixations.by_image()
    counts = np.zeros(10)
    for img in images:
        pts = per_image.get(img.image_id)
        if pts is None:
            continue
        for ob in img.objects:
            ps = rasterize_polygon(ob.polygon, img.dims)
            prof_pts = pts[ps.mask()[np.clip(np.floor(pts[:, 1]).astype(int), 0, img.height - 1),
                                     np.clip(np.floor(pts[:, 0]).astype(int), 0, img.width - 1)]]
            if len(prof_pts):
                counts += ring_fixation_profile(ring_partition(ps, center_of_mass(ps)), prof_pts).counts
    p = counts / counts.sum()
    assert np.all(np.diff(p) <= 0), p
    assert center_bias_index(p) > 0.5
    sal_dir = root / "saliency"
    if sal_dir.is_dir():
        saliency = {
            img.image_id: load_external_saliency(sal_dir / f"{img.image_id}.smap", img.dims)
            for img in images if img.image_id in per_image
        }
        res = sweep_beta(images, fixations, saliency)
        interior = res.mean_nss[1:-1]
        assert interior.max() > max(res.mean_nss[0], res.mean_nss[-1])


@criterion(9)
def test_round_trips(tmp_path, capsys):
    rng = np.random.default_rng(9)
    grid = np.abs(rng.standard_normal((31, 17))) * 10.0 ** rng.integers(-300, 300, size=(31, 17))
    grid[0, :4] = [0.0, 1e-310, 5e-324, np.finfo(float).max]
    write_map(tmp_path / "g.smap", grid)
    back = read_map(tmp_path / "g.smap")
    assert back.tobytes() == grid.tobytes()

    images, fixations, saliency = make_dataset(seed=5, n_images=3, n_fix=150)
    ann, fix, sal = write_dataset(tmp_path / "data", images, fixations, saliency)
    first = ann.read_bytes()
    loaded = load_annotations(ann)
    assert loaded == images
    save_annotations(loaded, tmp_path / "again.json")
    assert (tmp_path / "again.json").read_bytes() == first

    def tree(root):
        return {p.relative_to(root).as_posix(): p.read_bytes() for p in sorted(root.rglob("*")) if p.is_file()}

    common = ["--annotations", ann, "--fixations", fix]
    for run in ("a", "b"):
        out = tmp_path / run
        for cmd in (["sweep", *common, "--saliency-dir", sal],
                    ["rings", *common, "--saliency-dir", sal],
                    ["stats", *common],
                    ["objmap", "--annotations", ann]):
            assert run_cli([str(x) for x in cmd] + ["--out-dir", str(out)]) == 0
        assert run_cli(["compare", "--sweep-csv", str(out / "sweep.csv"), "--out-dir", str(out)]) == 0
    capsys.readouterr()
    a, b = tree(tmp_path / "a"), tree(tmp_path / "b")
    assert len(a) >= 15
    assert a == b
