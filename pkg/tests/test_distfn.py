import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from probnorm.distfn import (EPS0, EPS_INF, DFFormatError, DistFn, df_leq, df_pointwise_sup, evaluate, format_df,
                             from_steps, parse_df, random_distfn, read_df, right_limit, sibley, sibley_condition,
                             sibley_to_eps0, sup_from_jumps, unit_step, weak_convergence_check, write_df)
from probnorm.oracles import sibley_grid
from strategies import distfns, positive

TOL = 1e-9


class TestEvaluation:
    def test_eps0_values(self):
        assert evaluate(EPS0, 0.0) == 0.0
        assert evaluate(EPS0, 0.5) == 1.0
        assert evaluate(EPS0, -3.0) == 0.0

    def test_left_continuity_at_jump(self):
        assert unit_step(0.3)(0.3) == 0.0

    def test_right_limits(self):
        assert right_limit(unit_step(0.3), 0.3) == 1.0
        assert right_limit(EPS0, 0.0) == 1.0
        assert right_limit(unit_step(0.3), 0.2) == 0.0

    def test_plus_infinity_is_one(self):
        assert EPS_INF(math.inf) == 1.0
        assert from_steps([1.0], [0.4])(math.inf) == 1.0
        assert from_steps([1.0], [0.4])(1e300) == 0.4

    def test_vectorised_call_matches_scalar(self):
        F = from_steps([0.5, 1.0, 2.0], [0.2, 0.6, 0.9])
        xs = np.array([-1, 0, 0.5, 0.50001, 1, 1.5, 2, 3, math.inf])
        assert F(xs).tolist() == [F(float(x)) for x in xs]


class TestConstruction:
    def test_unit_step_zero_is_identity_element(self):
        assert unit_step(0) == EPS0
        assert all(EPS0(x) == 1.0 for x in (1e-12, 0.5, 7.0))

    def test_eps_inf(self):
        F = unit_step(math.inf)
        assert F == EPS_INF and F.left_limit_at_infinity == 0.0 and not F.in_d_plus

    def test_unit_step_placement(self):
        F = unit_step(2)
        assert F(2) == 0.0 and F(2.001) == 1.0

    def test_negative_step_rejected(self):
        with pytest.raises(ValueError):
            unit_step(-0.1)

    @pytest.mark.parametrize("xs, vs", [([1, 0.5], [0.2, 0.3]), ([0.5, 1], [0.6, 0.3]), ([-1], [1]),
                                        ([1], [1.5]), ([math.inf], [1])])
    def test_invalid_encodings(self, xs, vs):
        with pytest.raises(ValueError):
            from_steps(xs, vs)

    def test_canonicalisation_merges_flat_steps(self):
        assert from_steps([0.5, 1.0, 2.0], [0.0, 1.0, 1.0]) == unit_step(1.0)

    def test_d_plus_membership(self):
        assert from_steps([1], [1]).in_d_plus
        assert not from_steps([1], [0.9]).in_d_plus


class TestOrder:
    def test_later_step_is_smaller(self):
        assert df_leq(unit_step(2), unit_step(1))
        assert not df_leq(unit_step(1), unit_step(2))

    @given(distfns())
    def test_reflexive_and_eps0_maximal(self, F):
        assert df_leq(F, F)
        assert df_leq(F, EPS0)
        assert df_leq(EPS_INF, F)

    @given(distfns(), distfns())
    def test_leq_matches_dense_sampling(self, F, G):
        xs = np.concatenate([np.linspace(0, 3.5, 701), np.asarray(F.xs + G.xs) + 1e-9])
        if df_leq(F, G):
            assert np.all(F(xs) <= G(xs))


class TestPointwiseSup:
    def test_singleton(self):
        F = from_steps([0.5, 1.0], [0.3, 1.0])
        assert df_pointwise_sup([F]) == F

    def test_earlier_step_wins(self):
        assert df_pointwise_sup([unit_step(1), unit_step(2)]) == unit_step(1)

    def test_chain(self):
        assert df_pointwise_sup([unit_step(1 / k) for k in range(1, 21)]) == unit_step(1 / 20)

    def test_empty_rejected(self):
        with pytest.raises(ValueError):
            df_pointwise_sup([])

    @given(st.lists(distfns(), min_size=1, max_size=4))
    def test_sup_is_least_upper_bound_on_grid(self, family):
        S = df_pointwise_sup(family)
        xs = np.concatenate([np.linspace(-0.5, 3.5, 801)] + [np.asarray(F.xs) + d for F in family
                                                            for d in (0, 1e-9)])
        assert np.array_equal(S(xs), np.max([F(xs) for F in family], axis=0))

    def test_sup_from_jumps_matches_family_sup(self):
        xs = np.array([3.0, 1.0, 2.0, 1.0])
        vs = np.array([1.0, 0.5, 0.25, 0.7])
        fam = [DistFn((x,), (v,)) for x, v in zip(xs, vs)]
        assert sup_from_jumps(xs, vs) == df_pointwise_sup(fam)


class TestSibley:
    def test_identity(self):
        F = from_steps([0.5, 1.0], [0.3, 1.0])
        assert sibley(F, F, TOL) == 0.0

    def test_step_against_eps0(self):
        assert sibley(unit_step(0.3), EPS0, TOL) == pytest.approx(0.3, abs=TOL)

    def test_extreme_pair(self):
        assert sibley(EPS0, EPS_INF, TOL) == pytest.approx(1.0, abs=TOL)

    def test_tol_must_be_positive(self):
        with pytest.raises(ValueError):
            sibley(EPS0, EPS0, 0.0)

    def test_closed_form_against_eps0(self):
        assert sibley_to_eps0(EPS0) == 0.0
        assert sibley_to_eps0(unit_step(0.4)) == 0.4
        assert sibley_to_eps0(unit_step(7)) == 1.0
        assert sibley_to_eps0(EPS_INF) == 1.0

    @given(distfns())
    def test_closed_form_matches_bisection(self, F):
        assert abs(sibley_to_eps0(F) - sibley(F, EPS0, TOL)) <= 2 * TOL

    @given(distfns(), distfns())
    def test_symmetry_and_range(self, F, G):
        d = sibley(F, G, TOL)
        assert d == sibley(G, F, TOL)
        assert 0.0 <= d <= 1.0

    @given(distfns(), distfns(), distfns())
    def test_triangle_inequality(self, F, G, H):
        assert sibley(F, H, TOL) <= sibley(F, G, TOL) + sibley(G, H, TOL) + 2 * TOL

    @given(distfns(), distfns())
    def test_distinct_functions_are_apart(self, F, G):
        if F != G:
            assert sibley(F, G, TOL) > 0

    @given(distfns(), distfns(), st.floats(1e-4, 1.0), st.floats(0.0, 1.0))
    def test_condition_monotone_in_h(self, F, G, h, extra):
        if sibley_condition(F, G, h):
            assert sibley_condition(F, G, min(1.0, h + extra))

    @given(distfns(), distfns())
    def test_antitone_against_eps0(self, F, G):
        if df_leq(F, G):
            assert sibley_to_eps0(G) <= sibley_to_eps0(F)

    @given(distfns(), st.floats(1e-6, 1.0))
    def test_equivalence_value_vs_distance(self, F, t):
        assert (F(t) > 1 - t) == (sibley_to_eps0(F) < t)

    @given(positive)
    def test_eps_a_distance_is_min_a_1(self, a):
        assert sibley_to_eps0(unit_step(a)) == pytest.approx(min(a, 1.0), abs=TOL)
        assert sibley(unit_step(a), EPS0, TOL) == pytest.approx(min(a, 1.0), abs=TOL)

    def test_agrees_with_grid_oracle(self):
        rng = np.random.default_rng(11)
        for _ in range(40):
            F, G = random_distfn(rng), random_distfn(rng)
            assert abs(sibley(F, G) - sibley_grid(F, G)) <= 2e-4


class TestWeakConvergence:
    def test_shrinking_steps_converge(self):
        # final d_S equals 1/100, so the tolerance must sit above it
        rep = weak_convergence_check([unit_step(1 / n) for n in range(1, 101)], EPS0, tol=0.02)
        assert rep.passed and rep.details["converges"]
        assert rep.details["final_dS"] == pytest.approx(1 / 100)

    def test_constant_sequence(self):
        F = from_steps([0.5, 2.0], [0.4, 1.0])
        rep = weak_convergence_check([F] * 10, F)
        assert rep.passed and rep.details["converges"] and rep.details["final_dS"] == 0.0

    def test_steps_drifting_to_one_do_not_converge_to_eps0(self):
        rep = weak_convergence_check([unit_step(1 + 1 / n) for n in range(1, 101)], EPS0)
        assert rep.passed and not rep.details["converges"]
        assert rep.details["final_dS"] == pytest.approx(1.0)

    def test_empty_rejected(self):
        with pytest.raises(ValueError):
            weak_convergence_check([], EPS0)


class TestDFFormat:
    def test_parse(self):
        F = parse_df("DF v1\n# comment\n0.5 0.2\n1 1\ninf 1\n")
        assert F == from_steps([0.5, 1.0], [0.2, 1.0])

    @pytest.mark.parametrize("text, line", [
        ("DF v2\ninf 1\n", 1),
        ("DF v1\n1 0.5\n0.5 0.6\ninf 1\n", 3),
        ("DF v1\n1 0.5\n2 0.4\ninf 1\n", 3),
        ("DF v1\n1 1.5\ninf 1\n", 2),
        ("DF v1\n1 x\ninf 1\n", 2),
        ("DF v1\n1 0.5\n", 2),
        ("DF v1\n1 0.5\ninf 0.5\n", 3),
    ])
    def test_errors_carry_line_numbers(self, text, line):
        with pytest.raises(DFFormatError, match=f"f.df:{line}"):
            parse_df(text, "f.df")

    @given(distfns())
    def test_round_trip(self, F):
        assert parse_df(format_df(F)) == F

    def test_file_round_trip(self, tmp_path):
        F = from_steps([0.1, 0.7], [0.3, 1.0])
        write_df(F, tmp_path / "f.df")
        assert read_df(tmp_path / "f.df") == F
