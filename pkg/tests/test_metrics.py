import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import special, stats

from gazecenter.dataset import ImageAnnotation, ObjectAnnotation
from gazecenter.errors import GazeCenterError
from gazecenter.geometry import PixelSet, Point, center_of_mass, rasterize_polygon, ring_partition
from gazecenter.maps import WeightScheme, object_weight_map
from gazecenter.metrics import (
    betainc_regularized,
    center_bias_index,
    nss,
    nss_detail,
    paired_t_test,
    ring_fixation_profile,
    ring_saliency_profile,
)

from reference_values import TTEST_CASES
from synthetic import disk_polygon, random_field

GRID_1_9 = np.arange(1.0, 10.0).reshape(3, 3)


class TestNSS:
    def test_hand_example(self):
        # value 9 sits at column 2, row 2
        assert nss(GRID_1_9, [(2.5, 2.5)]) == pytest.approx((9 - 5) / math.sqrt(60 / 9), abs=1e-12)
        assert nss(GRID_1_9, [(2.5, 2.5)]) == pytest.approx(1.5492, abs=1e-4)

    def test_affine(self):
        assert nss(2 * GRID_1_9 + 3, [(2.5, 2.5)]) == pytest.approx(1.5492, abs=1e-4)

    def test_constant_map(self):
        assert nss(np.full((4, 4), 0.3), [(1, 1), (2, 3)]) == 0.0

    def test_out_of_bounds_dropped(self):
        res = nss_detail(GRID_1_9, [(2.5, 2.5), (3.0, 1.0), (-0.1, 0.0)])
        assert res.n_used == 1
        assert res.n_dropped == 2
        assert res.score == pytest.approx(1.5492, abs=1e-4)

    def test_no_fixations_in_bounds(self):
        with pytest.raises(GazeCenterError) as err:
            nss(GRID_1_9, [(5, 5)])
        assert err.value.code == "NO_IN_BOUNDS_FIXATIONS"

    def test_mean_of_pixel_scores(self):
        z = (GRID_1_9 - 5) / GRID_1_9.std()
        pts = [(0.2, 0.9), (1.5, 2.1), (1.5, 2.9)]
        assert nss(GRID_1_9, pts) == pytest.approx((z[0, 0] + 2 * z[2, 1]) / 3, abs=1e-15)

    def test_random_fixations_at_chance(self):
        rng = np.random.default_rng(11)
        grid = random_field(rng, (30, 40))
        scores = [nss(grid, rng.uniform((0, 0), (40, 30), size=(1, 2))) for _ in range(10_000)]
        assert abs(np.mean(scores)) < 0.05


@settings(max_examples=100, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), a=st.floats(1e-3, 1e3), b=st.floats(-1e3, 1e3))
def test_nss_affine_invariance(seed, a, b):
    rng = np.random.default_rng(seed)
    grid = rng.uniform(0, 1, size=(7, 9))
    pts = rng.uniform((0, 0), (9, 7), size=(15, 2))
    assert nss(a * grid + b, pts) == pytest.approx(nss(grid, pts), abs=1e-9)


def block_partition(k=10):
    ps = PixelSet((10, 10), [(c, r) for r in range(10) for c in range(10)])
    return ring_partition(ps, center_of_mass(ps), k)


class TestRingFixationProfile:
    def test_all_in_ring_one(self):
        part = block_partition()
        px = part.ring_pixels(1)
        pts = px[:3] + 0.5
        prof = ring_fixation_profile(part, pts)
        assert prof.p.tolist() == [1.0] + [0.0] * 9
        assert prof.obj_cnt_idx == 1.0

    def test_count_example(self):
        counts = [20, 15, 12, 10, 8, 8, 8, 7, 6, 6]
        part = block_partition()
        pts = np.concatenate(
            [np.repeat(part.ring_pixels(i + 1)[:1] + 0.25, n, axis=0) for i, n in enumerate(counts)]
        )
        prof = ring_fixation_profile(part, pts)
        np.testing.assert_allclose(prof.p, np.array(counts) / 100)
        assert prof.obj_cnt_idx == pytest.approx(0.65, abs=1e-12)
        assert prof.n_fix == 100

    def test_ignores_fixations_outside(self):
        ps = rasterize_polygon(disk_polygon(10, 10, 6), (20, 20))
        part = ring_partition(ps, center_of_mass(ps))
        rng = np.random.default_rng(4)
        pts = rng.uniform(0, 20, size=(500, 2))
        inside = ps.mask()[np.floor(pts[:, 1]).astype(int), np.floor(pts[:, 0]).astype(int)]
        prof = ring_fixation_profile(part, pts)
        assert prof.counts.sum() == inside.sum() == prof.n_fix

    def test_no_object_fixations(self):
        with pytest.raises(GazeCenterError) as err:
            ring_fixation_profile(block_partition(), [(15, 15)])
        assert err.value.code == "NO_OBJECT_FIXATIONS"

    def test_uniform_index(self):
        assert center_bias_index(np.full(10, 0.1)) == pytest.approx(0.5, abs=1e-15)
        # odd k: the inner ceil(k/2) rings
        assert center_bias_index([1, 1, 1]) == pytest.approx(2 / 3)

    def test_with_saliency(self):
        part = block_partition()
        sal = np.full((10, 10), 0.01)
        prof = ring_fixation_profile(part, [(5, 5)], sal)
        np.testing.assert_allclose(prof.mean_sal, 0.01)


class TestRingSaliencyProfile:
    def test_uniform(self):
        part = block_partition()
        np.testing.assert_allclose(ring_saliency_profile(part, np.full((10, 10), 0.01)), 0.01)

    def test_linear_object_map_decreasing(self):
        img = ImageAnnotation("i", (40, 40), (ObjectAnnotation("o", disk_polygon(20, 20, 15)),))
        grid = object_weight_map(img, WeightScheme("linear"))
        ps = rasterize_polygon(img.objects[0].polygon, img.dims)
        prof = ring_saliency_profile(ring_partition(ps, center_of_mass(ps)), grid)
        assert np.all(np.diff(prof) < 0)

    def test_matches_enumeration(self):
        rng = np.random.default_rng(8)
        grid = rng.uniform(size=(8, 8))
        cells = rng.choice(64, size=20, replace=False)
        pix = [(int(c % 8), int(c // 8)) for c in cells]
        part = ring_partition(PixelSet((8, 8), pix), Point(3.3, 4.1), k=4)
        expected = []
        for i in range(1, 5):
            members = [(c, r) for (c, r), ring in zip(part.pixel_set.pixels.tolist(), part.ring_of) if ring == i]
            expected.append(sum(grid[r, c] for c, r in members) / len(members))
        np.testing.assert_allclose(ring_saliency_profile(part, grid), expected, rtol=1e-14)

    def test_dim_mismatch(self):
        with pytest.raises(GazeCenterError) as err:
            ring_saliency_profile(block_partition(), np.ones((9, 10)))
        assert err.value.code == "DIM_MISMATCH"


class TestPairedTTest:
    @pytest.mark.parametrize("name,a,b,t,p", TTEST_CASES, ids=[c[0] for c in TTEST_CASES])
    def test_frozen_reference(self, name, a, b, t, p):
        res = paired_t_test(a, b)
        assert res.t_statistic == pytest.approx(t, abs=1e-6)
        assert res.p_value == pytest.approx(p, abs=1e-6)
        assert res.n == len(a)

    @pytest.mark.parametrize("shift", [0.5, 1.0, 2.0, 4.0])
    def test_small_p_relative(self, shift):
        rng = np.random.default_rng(int(shift * 10))
        a = rng.normal(0, 1, size=300)
        b = a - shift + rng.normal(0, 0.8, size=300)
        res = paired_t_test(a, b)
        ref = stats.ttest_rel(a, b)
        assert res.t_statistic == pytest.approx(ref.statistic, rel=1e-10)
        assert res.p_value == pytest.approx(ref.pvalue, rel=1e-8)

    def test_identical(self):
        res = paired_t_test([1, 2, 3], [1, 2, 3])
        assert (res.t_statistic, res.p_value) == (0.0, 1.0)

    def test_constant_difference(self):
        a = np.array([0.3, 1.7, 2.2, 0.9])
        res = paired_t_test(a + 1, a)
        assert res.p_value == 0.0
        assert res.t_statistic == math.inf
        assert paired_t_test(a + 0.1, a).p_value == 0.0

    def test_sem_and_mean(self):
        res = paired_t_test([1.2, 2.4, 1.9, 3.1, 2.2], [1.0, 2.0, 2.0, 2.5, 2.0])
        d = np.array([0.2, 0.4, -0.1, 0.6, 0.2])
        assert res.mean_diff == pytest.approx(d.mean())
        assert res.sem == pytest.approx(d.std(ddof=1) / math.sqrt(5))

    def test_errors(self):
        with pytest.raises(GazeCenterError) as err:
            paired_t_test([1, 2], [1, 2, 3])
        assert err.value.code == "LENGTH_MISMATCH"
        with pytest.raises(GazeCenterError) as err:
            paired_t_test([1], [2])
        assert err.value.code == "TOO_FEW_SAMPLES"


@settings(max_examples=100, deadline=None)
@given(st.lists(st.tuples(st.floats(-100, 100), st.floats(-100, 100)), min_size=2, max_size=30))
def test_t_test_antisymmetry(pairs):
    a, b = np.array(pairs).T
    ab, ba = paired_t_test(a, b), paired_t_test(b, a)
    assert ab.t_statistic == -ba.t_statistic or (ab.t_statistic == ba.t_statistic == 0)
    assert ab.p_value == ba.p_value
    assert 0.0 <= ab.p_value <= 1.0


@settings(max_examples=300, deadline=None)
@given(a=st.floats(0.05, 200), b=st.floats(0.05, 200), x=st.floats(0, 1))
def test_incomplete_beta_against_scipy(a, b, x):
    assert betainc_regularized(a, b, x) == pytest.approx(special.betainc(a, b, x), rel=1e-9, abs=1e-14)
