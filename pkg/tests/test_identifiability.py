import itertools

import numpy as np
import pytest
from conftest import random_model

from grom3.errors import GroupTooSmall, NotDirichletConsistent
from grom3.identifiability import (
    check_theorem1,
    check_theorem2,
    check_theorem3,
    khatri_rao_rank,
    recover_alpha_from_core,
)
from grom3.model import GroM3Model, ModelDims, core_tensor
from grom3.simulate import SCENARIOS, preset_scenario


def binary(a):
    a = np.asarray(a, dtype=float)
    return np.vstack([a, 1 - a])


class TestTheorem1:
    def test_stacked_identity_full_rank(self):
        G, K = 3, 3
        lam = 0.7 * np.eye(K) + 0.1
        m = GroM3Model(np.arange(3 * G) % G, [lam] * (3 * G), np.ones(K), G)
        rep = check_theorem1(m)
        assert rep.satisfied and rep.witnesses["part a"] and rep.witnesses["part b"]

    def test_group_with_two_members(self, rng):
        m = random_model(rng, p=5, G=2, K=2, d=3, s=[0, 0, 0, 1, 1])
        rep = check_theorem1(m)
        assert not rep.satisfied and not rep.witnesses["part a"]

    def test_binary_cannot_reach_three_profiles(self, rng):
        m = random_model(rng, p=6, G=2, K=3, d=(2, 3, 3, 3, 3, 3))
        rep = check_theorem1(m)
        assert not rep.witnesses["part a"]

    def test_constant_table_fails_part_b(self, rng):
        m = random_model(rng, p=6, G=1, K=2, d=3)
        lams = list(m.lambdas)
        lams[0] = np.full((3, 2), 1 / 3)
        rep = check_theorem1(GroM3Model(m.s, lams, m.alpha, 1))
        assert not rep.witnesses["part b"]

    def test_render(self, rng):
        text = check_theorem1(random_model(rng, p=6, G=2, K=2, d=3)).render()
        assert text.startswith("theorem: theorem1\nsatisfied: true")


class TestTheorem2:
    @pytest.mark.parametrize("seed", range(3))
    def test_pairs_of_binary_variables(self, seed):
        rng = np.random.default_rng(seed)
        m = random_model(rng, p=18, G=3, K=3, d=2)
        rep = check_theorem2(m)
        assert rep.satisfied
        for g in range(3):
            assert all(len(part) >= 2 for part in rep.witnesses[f"group {g} partition"])
        assert not check_theorem1(m).satisfied

    def test_equal_entries_pair_is_rank_deficient(self):
        # all a_k equal violates the sufficient condition; the pair loses rank
        flat = binary([0.3, 0.3, 0.3])
        assert khatri_rao_rank([flat, binary([0.2, 0.4, 0.8])]) == 2
        assert khatri_rao_rank([binary([0.1, 0.5, 0.9]), binary([0.2, 0.4, 0.8])]) == 3

    def test_group_needing_the_degenerate_pair_fails(self, rng):
        lams = [binary([0.3, 0.3, 0.3])] + [binary(rng.uniform(size=3)) for _ in range(5)]
        m = GroM3Model(np.zeros(6, int), lams, np.ones(3), 1)
        rep = check_theorem2(m)
        assert not rep.satisfied
        assert any("partition" in msg for msg in rep.failures)
        assert check_theorem3(m.dims, m.s).satisfied

    def test_group_too_small(self, rng):
        with pytest.raises(GroupTooSmall):
            check_theorem2(random_model(rng, p=5, G=2, K=2, d=3, s=[0, 0, 0, 1, 1]))

    @pytest.mark.parametrize("name", [n for n in SCENARIOS if n not in ("K4-p30", "K4-p60")])
    def test_presets(self, name):
        assert check_theorem2(preset_scenario(name)).satisfied

    @pytest.mark.xfail(strict=True, reason="five ternary members per group cannot reach rank 4 "
                                           "in three disjoint sets")
    @pytest.mark.parametrize("name", ["K4-p30", "K4-p60"])
    def test_presets_four_profiles_small_groups(self, name):
        assert check_theorem2(preset_scenario(name)).satisfied

    @pytest.mark.parametrize("name", ["K2-p30", "K3-p60", "K4-p90"])
    def test_generic_random_tables(self, name):
        shape = preset_scenario(name)
        rng = np.random.default_rng(7)
        for _ in range(100):
            lams = [rng.dirichlet(np.ones(3), size=shape.K).T for _ in range(shape.p)]
            assert check_theorem2(GroM3Model(shape.s, lams, shape.alpha, shape.G)).satisfied

    @pytest.mark.parametrize("seed", range(10))
    def test_theorem1_implies_theorem2(self, seed):
        rng = np.random.default_rng(seed)
        m = random_model(rng, p=9, G=3, K=3, d=int(rng.integers(2, 5)))
        if check_theorem1(m).satisfied:
            assert check_theorem2(m).satisfied


class TestTheorem3:
    def test_binary_pairs(self):
        assert check_theorem3(ModelDims(18, 3, 3, (2,) * 18), np.arange(18) % 3).satisfied

    def test_binary_singletons_fail(self):
        assert not check_theorem3(ModelDims(6, 2, 5, (2,) * 6), np.arange(6) % 2).satisfied

    def test_ternary_singletons(self):
        assert check_theorem3(ModelDims(3, 1, 3, (3,) * 3), np.zeros(3, int)).satisfied

    def test_greedy_large_group(self):
        assert check_theorem3(ModelDims(30, 1, 4, (2,) * 30), np.zeros(30, int)).satisfied

    @pytest.mark.parametrize("seed", range(20))
    def test_monotone(self, seed):
        rng = np.random.default_rng(seed)
        p, G, K = int(rng.integers(3, 10)), int(rng.integers(1, 3)), int(rng.integers(2, 7))
        d = tuple(int(v) for v in rng.integers(2, 4, size=p))
        s = rng.integers(0, G, size=p)
        before = check_theorem3(ModelDims(p, G, K, d), s).satisfied
        d2 = list(d)
        d2[int(rng.integers(p))] += 1
        grown_d = check_theorem3(ModelDims(p, G, K, tuple(d2)), s).satisfied
        grown_g = check_theorem3(ModelDims(p + 1, G, K, d + (2,)),
                                 np.append(s, rng.integers(G))).satisfied
        if before:
            assert grown_d and grown_g


class TestRecoverAlpha:
    def test_two_three(self):
        assert np.allclose(recover_alpha_from_core(core_tensor([2.0, 3.0], 2)), [2, 3],
                           rtol=1e-12)

    def test_four_profiles(self):
        alpha = np.array([0.4, 0.5, 0.6, 0.7])
        assert np.allclose(recover_alpha_from_core(core_tensor(alpha, 3)), alpha,
                           rtol=1e-9, atol=0)

    @pytest.mark.parametrize("G,K", list(itertools.product([2, 3], [2, 3, 4])))
    @pytest.mark.oracle
    def test_round_trip(self, G, K):
        rng = np.random.default_rng(G * 10 + K)
        for _ in range(5):
            alpha = rng.uniform(0.1, 5, size=K)
            assert np.allclose(recover_alpha_from_core(core_tensor(alpha, G)), alpha,
                               rtol=1e-9, atol=0)

    def test_perturbed(self):
        phi = core_tensor([0.4, 0.5, 0.6], 2).copy()
        phi[0, 1] += 0.01
        phi /= phi.sum()
        with pytest.raises(NotDirichletConsistent):
            recover_alpha_from_core(phi)

    def test_single_profile(self):
        with pytest.raises(ValueError):
            recover_alpha_from_core(np.ones((1, 1)))
