import itertools
import math

import numpy as np
import pytest
from conftest import random_model

from grom3.association import cluster_variables, sample_cramers_v, sample_cramers_v_matrix
from grom3.errors import AllDiscarded, LengthMismatch, ShapeMismatch, TooFewSamples
from grom3.mcmc import SamplerConfig, run_chain
from grom3.model import GroM3Model
from grom3.posterior import (
    PosteriorSummary,
    align_profiles,
    ari,
    derived_seed,
    evaluate,
    model_selection_scan,
    rmse,
    summarize,
    summarize_grouping,
    waic_from_pointwise,
)
from grom3.simulate import Dataset, preset_scenario, sample_dataset


class TestGroupingMode:
    def test_constant(self):
        assert list(summarize_grouping(np.tile([1, 0, 2], (7, 1)), 3)) == [1, 0, 2]

    def test_majority(self):
        draws = np.array([[0]] * 40 + [[1]] * 60)
        assert summarize_grouping(draws, 2)[0] == 1

    def test_tie_goes_to_first(self):
        draws = np.array([[0]] * 50 + [[1]] * 50)
        assert summarize_grouping(draws[::-1], 2)[0] == 0


class TestAlign:
    def test_identity(self):
        lams = preset_scenario("K3-p30").lambdas
        assert list(align_profiles(lams, lams)) == [0, 1, 2]

    @pytest.mark.parametrize("name", ["K2-p30", "K3-p60", "K4-p90"])
    def test_every_permutation(self, name):
        lams = preset_scenario(name).lambdas
        K = lams[0].shape[1]
        for perm in itertools.permutations(range(K)):
            perm = np.array(perm)
            est = [t[:, perm] for t in lams]
            got = align_profiles(est, lams)
            assert all(np.array_equal(e[:, got], t) for e, t in zip(est, lams))

    def test_noisy_planted(self):
        rng = np.random.default_rng(0)
        lams = preset_scenario("K3-p30").lambdas
        for _ in range(20):
            perm = rng.permutation(3)
            noisy = [t + rng.uniform(0, 0.05, size=t.shape) for t in lams]
            noisy = [t / t.sum(axis=0) for t in noisy]
            est = [t[:, perm] for t in noisy]
            got = align_profiles(est, lams)
            assert np.array_equal(perm[got], [0, 1, 2])

    def test_greedy_fallback_is_permutation(self):
        truth = [np.array([[0.5, 0.6, 0.1], [0.5, 0.4, 0.9]])]
        est = [np.array([[0.55, 0.55, 0.1], [0.45, 0.45, 0.9]])]
        got = align_profiles(est, truth)
        assert sorted(got.tolist()) == [0, 1, 2]

    def test_rmse_invariant_after_alignment(self):
        rng = np.random.default_rng(1)
        lams = preset_scenario("K4-p30").lambdas
        noisy = [t + rng.uniform(0, 0.03, size=t.shape) for t in lams]
        base = None
        for perm in itertools.permutations(range(4)):
            est = [t[:, list(perm)] for t in noisy]
            got = align_profiles(est, lams)
            r = rmse([e[:, got] for e in est], list(lams))
            base = r if base is None else base
            assert r == base


class TestRMSE:
    def test_cases(self):
        x = np.arange(6.0).reshape(2, 3)
        assert rmse(x, x) == 0
        assert rmse(0.0, 1.0) == 1.0
        assert np.isclose(rmse(x + 0.01, x), 0.01)
        assert np.isclose(rmse([x + 0.01, x[:1]], [x, x[:1] - 0.01]), 0.01)

    def test_mismatch(self):
        with pytest.raises(ShapeMismatch):
            rmse(np.zeros(3), np.zeros(4))
        with pytest.raises(ShapeMismatch):
            rmse([np.zeros(2)], [np.zeros(2), np.zeros(2)])


def brute_ari(a, b):
    n = len(a)
    pairs = list(itertools.combinations(range(n), 2))
    both = sum(a[i] == a[j] and b[i] == b[j] for i, j in pairs)
    sa = sum(a[i] == a[j] for i, j in pairs)
    sb = sum(b[i] == b[j] for i, j in pairs)
    expected = sa * sb / len(pairs)
    return (both - expected) / ((sa + sb) / 2 - expected)


class TestARI:
    def test_identical(self):
        assert ari([0, 0, 1, 2], [5, 5, 3, 1]) == 1.0

    def test_one_cluster_vs_singletons(self):
        assert ari([0] * 6, list(range(6))) == 0.0

    @pytest.mark.oracle
    def test_brute_force(self):
        rng = np.random.default_rng(0)
        for _ in range(200):
            a, b = rng.integers(0, 3, 8), rng.integers(0, 4, 8)
            if len(set(a)) in (1, 8) and len(set(b)) in (1, 8):
                continue
            assert ari(a, b) == pytest.approx(brute_ari(a, b), abs=1e-12)

    def test_symmetry_and_relabeling(self):
        rng = np.random.default_rng(1)
        for _ in range(50):
            a, b = rng.integers(0, 3, 10), rng.integers(0, 3, 10)
            assert ari(a, b) == pytest.approx(ari(b, a), abs=1e-15)
            assert ari(a, b) == pytest.approx(ari(rng.permutation(3)[a], (b + 7) * 2), abs=1e-15)

    def test_length_mismatch(self):
        with pytest.raises(LengthMismatch):
            ari([0, 1], [0, 1, 1])


class TestWAIC:
    def test_constant(self):
        c, n = 0.3, 5
        w, lppd, pw = waic_from_pointwise(np.full((10, n), np.log(c)))
        assert np.isclose(w, -2 * n * np.log(c), rtol=1e-14) and pw == 0

    def test_duplicated_draws_keep_lppd(self):
        rng = np.random.default_rng(0)
        logp = rng.normal(-1, 0.3, size=(6, 4))
        _, lppd, _ = waic_from_pointwise(logp)
        _, lppd2, _ = waic_from_pointwise(np.vstack([logp, logp]))
        assert lppd2 == pytest.approx(lppd, abs=1e-12)

    @pytest.mark.oracle
    def test_direct_formula(self):
        rng = np.random.default_rng(1)
        p = rng.uniform(0.05, 0.9, size=(4, 3))  # T = 4 draws, n = 3 subjects
        lppd = sum(math.log(sum(p[t, i] for t in range(4)) / 4) for i in range(3))
        pw = 0.0
        for i in range(3):
            v = [math.log(p[t, i]) for t in range(4)]
            mean = sum(v) / 4
            pw += sum((x - mean) ** 2 for x in v) / 3
        w, l2, p2 = waic_from_pointwise(np.log(p))
        assert abs(l2 - lppd) < 1e-10 and abs(p2 - pw) < 1e-10
        assert abs(w - (-2 * (lppd - pw))) < 1e-10

    def test_too_few(self):
        with pytest.raises(TooFewSamples):
            waic_from_pointwise(np.zeros((1, 3)))

    def test_summary_checks_identity(self):
        with pytest.raises(ValueError):
            PosteriorSummary([], np.ones(1), np.zeros(1, int), 1, 1, waic=1.0, lppd=0.0, p_waic2=0.0)


class TestSampleCramersV:
    def test_copy_is_one(self):
        x = np.array([0, 1] * 50)
        data = Dataset(np.stack([x, x], axis=1), (2, 2))
        assert sample_cramers_v(data, 0, 1) == 1.0

    def test_independent_is_small(self):
        rng = np.random.default_rng(0)
        data = Dataset(rng.integers(0, 3, size=(10000, 2)), (3, 3))
        assert sample_cramers_v(data, 0, 1) < 0.05

    def test_hand_computed(self):
        Y = np.array([[0, 0], [0, 0], [0, 1], [1, 1], [1, 1], [1, 0]])
        # table [[2, 1], [1, 2]]: chi2 = 6 * (1/3)^2 = 2/3, V = sqrt(chi2 / 6)
        assert np.isclose(sample_cramers_v(Dataset(Y, (2, 2)), 0, 1), 1 / 3)

    def test_matrix_range(self):
        data, _ = sample_dataset(preset_scenario("K2-p30"), 300, 1)
        V = sample_cramers_v_matrix(data)
        assert V.shape == (30, 30) and np.all((V >= 0) & (V <= 1)) and np.allclose(V, V.T)


class TestClusterVariables:
    def test_recovers_preset_grouping(self):
        m = preset_scenario("K3-p30")
        data, _ = sample_dataset(m, 1000, 3)
        assert ari(cluster_variables(data, 6), m.s) == 1.0

    def test_edge_counts(self):
        data, _ = sample_dataset(preset_scenario("K2-p30"), 50, 0)
        assert np.all(cluster_variables(data, 1) == 0)
        assert len(set(cluster_variables(data, 30))) == 30


def test_derived_seed_is_stable():
    assert derived_seed(7, 1, 2) == derived_seed(7, 1, 2)
    assert derived_seed(7, 1, 2) != derived_seed(7, 2, 1)


def test_evaluate_perfect():
    m = preset_scenario("K3-p30")
    ev = evaluate(m.permute_profiles([2, 0, 1]), m)
    assert ev["ari"] == 1.0 and ev["rmse_lambda"] == 0.0 and ev["rmse_alpha"] == 0.0


@pytest.fixture(scope="module")
def small_fit():
    m = random_model(np.random.default_rng(4), p=6, G=2, K=2, d=3)
    data, _ = sample_dataset(m, 60, 1)
    cfg = SamplerConfig(G=2, K=2, iterations=60, burn_in=30, thin=3, seed=1)
    return data, cfg, run_chain(data, cfg)


def test_summarize(small_fit):
    data, cfg, tr = small_fit
    summ = summarize(tr)
    assert np.isclose(summ.waic, -2 * (summ.lppd - summ.p_waic2))
    assert np.allclose(summ.alpha_mean, tr.alpha.mean(axis=0))
    assert isinstance(summ.model(), GroM3Model)
    recomputed = summarize(tr, data)
    assert np.isclose(recomputed.waic, summ.waic, rtol=1e-12)


def test_scan_single_candidate(small_fit):
    data, cfg, _ = small_fit
    res = model_selection_scan(data, [2], [2], cfg)
    assert res.selected == (2, 2) and len(res.table) == 1


def test_scan_discards_empty_groups(small_fit, monkeypatch):
    import grom3.posterior as post
    data, cfg, _ = small_fit
    real = post.summarize

    def fake(trace, data=None):
        s = real(trace, data)
        if trace.config.G == 3:
            s.waic, s.lppd, s.p_waic2 = -1e9, 5e8, 0.0
            s.occupied_groups = 2
        return s

    monkeypatch.setattr(post, "summarize", fake)
    res = model_selection_scan(data, [2, 3], [2], cfg)
    assert res.selected == (2, 2)
    assert [r["kept"] for r in res.table] == [True, False]
    with pytest.raises(AllDiscarded):
        model_selection_scan(data, [3], [2], cfg)
