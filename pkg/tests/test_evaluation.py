import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dcpv.errors import ParameterError
from dcpv.evaluation import (
    ScoreSet,
    distribution_stats,
    eer,
    local_unlinkability,
    roc_points,
    unlinkability,
    unlinkability_from_histograms,
)


def brute_force_eer(gen, imp):
    # dense threshold sweep; EER where |FAR - FRR| is smallest
    ts = np.linspace(min(gen.min(), imp.min()) - 1e-9, max(gen.max(), imp.max()), 200_001)
    far = np.array([(imp <= t).mean() for t in ts[::100]])
    frr = np.array([(gen > t).mean() for t in ts[::100]])
    k = np.argmin(np.abs(far - frr))
    return (far[k] + frr[k]) / 2


class TestEer:
    def test_separated(self):
        s = ScoreSet([0.1, 0.2, 0.3], [0.6, 0.7])
        rate, t = eer(s)
        assert rate == 0.0 and 0.3 <= t <= 0.6

    def test_fully_overlapping_reversed(self):
        rate, _ = eer(ScoreSet([0.9, 0.8], [0.1, 0.2]))
        assert rate == 1.0

    def test_interpolated_crossing(self):
        # FAR/FRR cross between thresholds 0.3 and 0.4
        rate, t = eer(ScoreSet([0.1, 0.4], [0.3, 0.9]))
        assert rate == pytest.approx(0.5)
        assert 0.3 <= t <= 0.4

    def test_gaussians_close_to_sweep(self, rng):
        gen = rng.normal(0.3, 0.05, 2000)
        imp = rng.normal(0.45, 0.05, 3000)
        rate, _ = eer(ScoreSet(gen, imp))
        assert abs(rate - brute_force_eer(gen, imp)) < 0.01

    def test_validation(self):
        with pytest.raises(ParameterError):
            ScoreSet([], [0.1])
        with pytest.raises(ParameterError):
            ScoreSet([np.nan], [0.1])

    @settings(max_examples=50, deadline=None)
    @given(st.lists(st.floats(0, 1), min_size=1, max_size=30),
           st.lists(st.floats(0, 1), min_size=1, max_size=30))
    def test_in_unit_interval(self, g, i):
        rate, _ = eer(ScoreSet(g, i))
        assert 0.0 <= rate <= 1.0


class TestRoc:
    def test_endpoints_and_monotone(self, rng):
        s = ScoreSet(rng.random(50) * 0.5, rng.random(80) * 0.5 + 0.3)
        pts = roc_points(s)
        assert pts[0] == (0.0, 0.0) and pts[-1] == (1.0, 1.0)
        far, gar = np.array(pts).T
        assert np.all(np.diff(far) >= 0) and np.all(np.diff(gar) >= 0)

    def test_thinning_keeps_ends(self, rng):
        s = ScoreSet(rng.random(500), rng.random(500))
        pts = roc_points(s, n_points=20)
        assert len(pts) <= 21 and pts[-1] == (1.0, 1.0)


def test_distribution_stats():
    (gm, gs), (im, is_) = distribution_stats(ScoreSet([0.0, 1.0], [0.5, 0.5, 0.5]))
    assert (gm, gs, im, is_) == (0.5, 0.5, 0.5, 0.0)


class TestUnlinkability:
    def test_local_conventions(self):
        d = local_unlinkability([0.0, 0.5, 0.3, 0.2], [0.0, 0.0, 0.1, 0.9])
        assert d[0] == 0.0  # 0/0 -> LR 1
        assert d[1] == 1.0  # x/0 -> LR inf
        assert d[2] == pytest.approx(2 * 3 / 4 - 1)
        assert d[3] == 0.0

    def test_histogram_global(self):
        local, d_sys = unlinkability_from_histograms([0.5, 0.5], [0.0, 1.0])
        assert list(local) == [1.0, 0.0] and d_sys == 0.5

    def test_identical_distributions(self, rng):
        res = unlinkability(rng.random(100_000), rng.random(100_000))
        assert res.d_sys < 0.02

    def test_disjoint_supports(self, rng):
        res = unlinkability(rng.random(5000) * 0.4, rng.random(5000) * 0.4 + 0.6)
        assert res.d_sys == 1.0
        res = unlinkability(rng.random(5000) * 0.4, rng.random(5000) * 0.4 + 0.6,
                            binning="width")
        assert res.d_sys == 1.0

    def test_rank_invariance(self, rng):
        a, b = rng.normal(0, 1, 3000), rng.normal(0.5, 1, 6000)
        base = unlinkability(a, b).d_sys
        assert unlinkability(np.exp(a), np.exp(b)).d_sys == pytest.approx(base, abs=1e-15)

    def test_omega_validation(self, rng):
        with pytest.raises(ParameterError):
            unlinkability(rng.random(10), rng.random(10), omega=0)
        with pytest.raises(ParameterError):
            unlinkability(rng.random(10), rng.random(10), bins=5)
        with pytest.raises(ParameterError):
            unlinkability(rng.random(10), rng.random(10), binning="kde")

    def test_masses_sum_to_one(self, rng):
        res = unlinkability(rng.random(700), rng.random(900), bins=50)
        assert res.mated_mass.sum() == pytest.approx(1.0)
        assert res.non_mated_mass.sum() == pytest.approx(1.0)
        assert res.scores.shape == (50,)
