import numpy as np
import pytest
from hypothesis import given, strategies as st

from probnorm.distfn import EPS0, df_equiv, df_leq, from_steps, scaled, sibley_to_eps0, unit_step
from probnorm.pnspace import (PNSpace, c00_space, check_axioms, check_lemma_alpha, check_serstnev,
                              check_strongly_bounded, in_strong_neighborhood, serstnev_simple_space, simple_space)
from probnorm.trifn import TAU_M, TAU_M_STAR, TAU_PI, TAU_PI_STAR, TriangleFn, table_tnorm
from strategies import vectors

F0 = from_steps([0.5, 1.0, 2.0], [0.3, 0.8, 1.0])
NORMS = ["l1", "l2", "linf"]


class TestConstructors:
    def test_simple_examples(self):
        S = simple_space(2, "l2")
        assert S.nu([0, 0]) == EPS0
        assert S.nu([3, 4]) == unit_step(5)
        assert S.nu([-3, -4]) == unit_step(5)

    def test_serstnev_examples(self):
        S = serstnev_simple_space(2, "l2", F0)
        assert S.nu([1, 0]) == F0
        assert S.nu([0, 0]) == EPS0
        p = np.array([0.6, 0.8])
        assert S.nu(2 * p) == scaled(S.nu(p), 2)

    def test_serstnev_needs_d_plus(self):
        with pytest.raises(ValueError):
            serstnev_simple_space(2, "l2", from_steps([1.0], [0.5]))
        with pytest.raises(ValueError):
            serstnev_simple_space(2, "l2", EPS0)

    def test_c00_examples(self):
        S = c00_space()
        assert S.nu([1]) == unit_step(1)
        assert S.nu([1, -0.25, -0.25, -0.25, -0.25]) == unit_step(1)
        assert S.nu([]) == EPS0

    def test_incompatible_pair_rejected(self):
        # tau_Pi lies below tau_M, so it cannot play the role of tau*
        with pytest.raises(ValueError):
            simple_space(2, "l2", TAU_M, TAU_PI)

    def test_table_tnorm_accepted_when_laws_hold(self):
        grid = np.linspace(0, 1, 3)
        T = table_tnorm("coarse-min", grid, np.array([[0, 0, 0], [0, 0, 0.5], [0, 0.5, 1.0]]))
        # the interpolated table still gives tau(eps_a, eps_b) = eps_(a+b), so the space is accepted
        S = simple_space(2, "l2", TriangleFn("sup", T), TriangleFn("inf", T))
        assert S.nu([3, 4]) == unit_step(5)

    def test_bad_vectors(self):
        S = simple_space(2)
        with pytest.raises(ValueError):
            S.nu([1, 2, 3])
        with pytest.raises(ValueError):
            S.nu([np.inf, 0])

    def test_unknown_norm(self):
        with pytest.raises(ValueError):
            PNSpace("finite", 2, "l3", "simple")


class TestAxioms:
    @pytest.mark.parametrize("dim", [1, 2, 3])
    @pytest.mark.parametrize("norm", NORMS)
    def test_simple_spaces_pass(self, dim, norm):
        rep = check_axioms(simple_space(dim, norm), samples=300, seed=7)
        assert rep.passed and rep.witness is None
        assert all(m >= 0 for m in rep.details["margins"].values())

    @pytest.mark.parametrize("norm", NORMS)
    def test_serstnev_space_passes(self, norm):
        assert check_axioms(serstnev_simple_space(2, norm, F0), samples=300, seed=1).passed

    def test_c00_passes(self):
        assert check_axioms(c00_space(), samples=300, seed=2).passed

    def test_menger_product_pair(self):
        assert check_axioms(simple_space(2, "l2", TAU_PI, TAU_PI_STAR), samples=200, seed=3).passed

    def test_squared_rule_breaks_n3(self):
        S = PNSpace("finite", 1, "l2", "squared", TAU_M, TAU_M_STAR)
        rep = check_axioms(S, samples=50, seed=0, pairs=[(np.array([0.4]), np.array([0.4]))])
        assert not rep.passed
        assert rep.witness["axiom"] == "N3"
        assert rep.details["margins"]["N3"] < 0
        # nu_{p+q} = eps_0.64 sits below tau(eps_0.16, eps_0.16) = eps_0.32
        assert S.nu([0.8]) == unit_step(0.8 * 0.8)
        assert TAU_M(S.nu([0.4]), S.nu([0.4])) == unit_step(2 * 0.4 * 0.4)

    def test_seed_pins_the_report(self):
        a = check_axioms(simple_space(3, "l1"), samples=50, seed=11)
        b = check_axioms(simple_space(3, "l1"), samples=50, seed=11)
        assert a.to_dict() == b.to_dict()

    def test_samples_positive(self):
        with pytest.raises(ValueError):
            check_axioms(simple_space(2), samples=0)


class TestSerstnev:
    @pytest.mark.parametrize("norm", NORMS)
    def test_simple_is_serstnev(self, norm):
        assert check_serstnev(simple_space(3, norm)).passed

    def test_rescaled_profile(self):
        assert check_serstnev(serstnev_simple_space(2, "l1", F0)).passed

    def test_alpha_zero_is_identity(self):
        S = serstnev_simple_space(2, "l2", F0)
        p = np.array([1.0, 2.0])
        assert TAU_M(S.nu(0 * p), S.nu(p)) == S.nu(p)

    def test_squared_rule_is_not_serstnev(self):
        S = PNSpace("finite", 2, "l2", "squared", TAU_M, TAU_M_STAR)
        assert not check_serstnev(S, samples=50).passed

    @given(p=vectors(2), lam=st.floats(-4, 4).filter(lambda x: abs(x) > 1e-3))
    def test_scaling_rule(self, p, lam):
        S = serstnev_simple_space(2, "l2", F0)
        if np.linalg.norm(p) > 1e-6:
            assert df_equiv(S.nu(lam * p), scaled(S.nu(p), abs(lam)), 1e-9)


class TestStrongTopology:
    def test_examples(self):
        S = simple_space(2)
        assert in_strong_neighborhood(S, [1, 2], 0.01, [1, 2])
        assert in_strong_neighborhood(S, [0, 0], 0.5, [0.3, 0])
        assert not in_strong_neighborhood(S, [0, 0], 0.2, [0.3, 0])

    def test_radius_positive(self):
        with pytest.raises(ValueError):
            in_strong_neighborhood(simple_space(2), [0, 0], 0.0, [1, 0])

    @pytest.mark.parametrize("space", [simple_space(2, "l1"), serstnev_simple_space(2, "l2", F0)],
                             ids=["simple", "serstnev"])
    @given(p=vectors(2, 1.0), q=vectors(2, 1.0), t=st.floats(1e-4, 1.0))
    def test_neighbourhood_matches_distance(self, space, p, q, t):
        assert in_strong_neighborhood(space, p, t, q) == (sibley_to_eps0(space.nu(q - p)) < t)


class TestStronglyBounded:
    def test_identity(self):
        S = simple_space(2)
        rep = check_strongly_bounded(np.eye(2), 1.0, S, S)
        assert rep.passed and rep.margin == 0

    def test_doubling_with_k2(self):
        S = simple_space(2)
        rep = check_strongly_bounded(2 * np.eye(2), 2.0, S, S)
        assert rep.passed and rep.margin == 0

    def test_doubling_with_k1_fails(self):
        S = simple_space(2)
        rep = check_strongly_bounded(lambda p: 2 * p, 1.0, S, S)
        assert not rep.passed and rep.witness is not None

    def test_k_positive(self):
        S = simple_space(2)
        with pytest.raises(ValueError):
            check_strongly_bounded(np.eye(2), 0.0, S, S)

    @given(p=vectors(2, 1.0), q=vectors(2, 1.0), t=st.floats(1e-3, 1.0))
    def test_bounded_map_is_continuous(self, p, q, t):
        S = simple_space(2)
        A, k = np.array([[2.0, 1.0], [0.0, -1.0]]), 3.0
        assert check_strongly_bounded(A, k, S, S, samples=20).passed
        kk = max(k, 1.0)
        if in_strong_neighborhood(S, p, t / kk, q):
            assert in_strong_neighborhood(S, A @ p, t, A @ q)


class TestLemmaAlpha:
    @pytest.mark.parametrize("space", [simple_space(3, "linf"), serstnev_simple_space(2, "l1", F0), c00_space()],
                             ids=["simple", "serstnev", "c00"])
    def test_passes(self, space):
        assert check_lemma_alpha(space).passed

    def test_example(self):
        S = simple_space(1)
        assert S.nu([2.0]) == unit_step(2)
        assert df_leq(S.nu([2.0]), S.nu([1.0]))
        assert df_leq(S.nu([2.0]), S.nu([0.0]))
