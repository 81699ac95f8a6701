import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from probnorm.complete import (PointSequence, build_delta_schedule, check_cauchy_factorization,
                               check_product_neighborhoods, explicit, is_strong_cauchy, lift_cauchy_sequence,
                               lift_representative, lift_with_floor, sample_ball, scalar_continuity_probe,
                               sequence_from_config, sigma_product, strong_limit_check, two_of_three_experiment,
                               uniform_continuity_probe)
from probnorm.distfn import EPS0, df_leq, sibley_to_eps0, unit_step
from probnorm.pnspace import c00_space, simple_space
from probnorm.quotient import QuotientSpace, c00_sum_kernel, coset_equal, span
from probnorm.report import Inconclusive
from probnorm.trifn import TAU_M, TAU_M_STAR, TAU_PI, TAU_PI_STAR, TAU_W

R2 = simple_space(2)
Q2 = QuotientSpace(R2, span([1, 0]))


def brute_tail(X, lam):
    """Least N with ||x_m - x_n|| < lam for all N <= n < m, from plain norm arithmetic."""
    bad = [n for n in range(1, len(X) + 1) for m in range(n + 1, len(X) + 1)
           if not np.linalg.norm(X[m - 1] - X[n - 1]) < lam]
    return max(bad, default=0) + 1


class TestSequences:
    def test_rules(self):
        assert np.allclose(PointSequence("reciprocal", {"c": [1, 0], "v": [0, 2]}, 10).term(4), [1, 0.5])
        assert np.allclose(PointSequence("alternating", {"v": [1, 0]}, 10).term(3), [-1, 0])
        assert np.allclose(PointSequence("geometric", {"c": [0], "v": [1], "r": 0.5}, 10).term(3), [0.125])
        A = [[1, 0, 0, 0], [0, 0, 0, 1]]
        assert np.allclose(PointSequence("custom-affine", {"A": A, "b": [0, 1]}, 10).term(2), [2, 1 + math.sin(2)])

    def test_validation(self):
        with pytest.raises(ValueError):
            PointSequence("spiral", {}, 10)
        with pytest.raises(ValueError):
            PointSequence("constant", {"c": [0]}, 1)
        with pytest.raises(ValueError):
            PointSequence("constant", {"c": [0]}, 5).term(0)
        with pytest.raises(ValueError):
            PointSequence("custom-affine", {"A": [[1, 0, 0]], "b": [0]}, 5)

    def test_from_config(self):
        seq = sequence_from_config({"rule": "constant", "c": [1, 2], "horizon": 7})
        assert seq.horizon == 7 and len(seq.terms()) == 7


class TestCauchy:
    def test_constant(self):
        rep = is_strong_cauchy(R2, PointSequence("constant", {"c": [1, 2]}, 30))
        assert rep.passed and all(N == 1 for _, N in rep.details["N"])

    def test_reciprocal_matches_norm_arithmetic(self):
        seq = PointSequence("reciprocal", {"c": [0, 0], "v": [1, 0]}, 100)
        rep = is_strong_cauchy(R2, seq)
        assert rep.passed
        X = seq.terms()
        assert dict(map(tuple, rep.details["N"])) == {lam: brute_tail(X, lam) for lam in (0.2, 0.1, 0.05)}

    def test_alternating_fails(self):
        rep = is_strong_cauchy(R2, PointSequence("alternating", {"v": [1, 0]}, 40))
        assert not rep.passed
        w = rep.witness
        assert abs(w["m"] - w["n"]) % 2 == 1 and w["value_at_lambda"] == 0.0

    def test_lambda_grid_validated(self):
        with pytest.raises(ValueError):
            is_strong_cauchy(R2, PointSequence("constant", {"c": [0, 0]}, 5), lambda_grid=(0.1, 0.0))

    def test_limit_examples(self):
        seq = PointSequence("reciprocal", {"c": [0, 0], "v": [1, 0]}, 100)
        rep = strong_limit_check(R2, seq, [0, 0])
        assert rep.passed
        # 1/n < lambda exactly from n = floor(1/lambda) + 1
        assert dict(map(tuple, rep.details["entry_index"])) == {0.2: 6, 0.1: 11, 0.05: 21}
        assert not strong_limit_check(R2, seq, [1, 0]).passed
        const = PointSequence("constant", {"c": [3, 1]}, 10)
        assert all(N == 1 for _, N in strong_limit_check(R2, const, [3, 1]).details["entry_index"])


class TestLifting:
    def test_representative_example(self):
        p2 = lift_representative(Q2, [0.3, 0.4], 0.01)
        assert np.allclose(p2, [0, 0.4])
        assert sibley_to_eps0(R2.nu(p2)) < sibley_to_eps0(Q2.nu([0.3, 0.4])) + 0.01

    def test_member_of_w(self):
        p2 = lift_representative(Q2, [5.0, 0.0], 0.1)
        assert sibley_to_eps0(R2.nu(p2)) < 0.1

    def test_eps_positive(self):
        with pytest.raises(ValueError):
            lift_representative(Q2, [0.3, 0.4], 0.0)

    @given(p=st.lists(st.floats(-3, 3), min_size=3, max_size=3), eps=st.sampled_from([0.1, 0.01]))
    def test_soundness(self, p, eps):
        for norm in ("l1", "linf"):
            Q = QuotientSpace(simple_space(3, norm), span([1, 2, 0], [0, 1, -1]))
            p2 = lift_representative(Q, p, eps)
            assert coset_equal(p2, p, Q.W)
            assert sibley_to_eps0(Q.ambient.nu(p2)) < sibley_to_eps0(Q.nu(p)) + eps

    def test_unsettled_schedule_is_inconclusive(self):
        Q = QuotientSpace(simple_space(2), span([1, 0]), strategy="sampled", radii=(1.0, 2.0))
        with pytest.raises(Inconclusive):
            lift_representative(Q, [30.0, 0.5], 0.01)

    def test_floor_attained(self):
        p = np.array([3.0, 0.4])
        p2 = lift_with_floor(Q2, p, Q2.nu(p))
        assert np.allclose(p2, [0, 0.4])

    def test_floor_in_w(self):
        p2 = lift_with_floor(Q2, [2.0, 0.0], unit_step(0.5))
        assert df_leq(unit_step(0.5), R2.nu(p2))

    def test_floor_on_c00(self):
        Q = QuotientSpace(c00_space(), c00_sum_kernel(), horizon=100)
        G = unit_step(0.5)
        p2 = lift_with_floor(Q, [1.0], G)
        assert coset_equal(p2, [1.0], Q.W)
        assert df_leq(Q.tau(Q.nu([1.0]), G), c00_space().nu(p2))
        assert c00_space().norm(p2) < 0.5 + 1 / 101

    def test_floor_preconditions(self):
        with pytest.raises(ValueError):
            lift_with_floor(Q2, [0, 4.0], unit_step(0.1))
        with pytest.raises(ValueError):
            lift_with_floor(Q2, [0, 4.0], EPS0)


class TestSchedule:
    @given(st.integers(0, 10_000), st.floats(1e-3, 1.0))
    def test_ball_samples_are_inside(self, seed, r):
        F = sample_ball(np.random.default_rng(seed), r)
        assert sibley_to_eps0(F) < r

    def test_depth_one(self):
        s = build_delta_schedule(TAU_M, 1)
        assert s.deltas == (0.5,) and s.target(1) == 1.0

    def test_min_schedule(self):
        s = build_delta_schedule(TAU_M, 5)
        assert s.deltas == (0.5, 0.25, 0.125, 0.0625, 0.03125)
        assert s.validate(draws=300, seed=9).passed

    def test_unit_steps_obey_sum_bound(self):
        s = build_delta_schedule(TAU_M, 4)
        for n, d in enumerate(s.deltas, start=1):
            a = b = d * 0.999
            assert sibley_to_eps0(TAU_M(unit_step(a), unit_step(b))) < s.target(n)

    def test_weaker_tau(self):
        assert build_delta_schedule(TAU_PI, 4, samples_per_ball=100).validate(draws=200).passed

    def test_depth_validated(self):
        with pytest.raises(ValueError):
            build_delta_schedule(TAU_M, 0)


class TestLiftSequence:
    def test_worked_example(self):
        a = PointSequence("custom-affine", {"A": [[10, 0, 0, 0], [0, 1, 0, 0]], "b": [0, 0]}, 50)
        res = lift_cauchy_sequence(Q2, a, build_delta_schedule(TAU_M, 5), 50)
        assert res.report.passed
        m = res.report.details["margins"]
        assert m["eq2"] > 0 and m["eq3"] > 0 and m["chain"] > 0
        for n_i, x in zip(res.indices, res.lifted.terms()):
            assert x[1] == pytest.approx(1 / n_i)
        assert is_strong_cauchy(R2, res.lifted, lambda_grid=(0.5, 0.25)).passed

    def test_constant_zero_coset(self):
        a = PointSequence("constant", {"c": [7, 0]}, 20)
        res = lift_cauchy_sequence(Q2, a, build_delta_schedule(TAU_M, 4), 20)
        assert res.report.passed
        assert all(Q2.W.contains(x) for x in res.lifted.terms())

    def test_non_cauchy_rejected(self):
        a = PointSequence("alternating", {"v": [0, 1]}, 20)
        with pytest.raises(ValueError):
            lift_cauchy_sequence(Q2, a, build_delta_schedule(TAU_M, 3), 20)


class TestTwoOfThree:
    R3 = simple_space(3)
    W = span([1, 0, 0])

    @pytest.mark.parametrize("scenario, seq", [
        ("V,W=>Q", PointSequence("custom-affine", {"A": [[0, 0, 0, 1], [0, 1, 0, 0], [0, 1, 0, 0]], "b": [0, 0, 0]}, 100)),
        ("V,Q=>W", PointSequence("reciprocal", {"c": [2, 0, 0], "v": [1, 0, 0]}, 100)),
        ("W,Q=>V", PointSequence("reciprocal", {"c": [1, 1, 0], "v": [-2, 1, 0]}, 100)),
    ])
    def test_scenarios_pass(self, scenario, seq):
        rep = two_of_three_experiment(self.R3, self.W, scenario, seq)
        assert rep.passed, rep.witness
        assert [s["pass"] for s in rep.details["stages"]] == [True] * len(rep.details["stages"])

    @pytest.mark.parametrize("scenario", ["V,W=>Q", "V,Q=>W", "W,Q=>V"])
    def test_constant(self, scenario):
        # H_n = eps_(1/n) needs n > 20 to enter the 0.05-ball, so the horizon must exceed 40
        seq = PointSequence("constant", {"c": [1.0, 0, 0] if scenario == "V,Q=>W" else [0.5, 0.2, -0.1]}, 60)
        assert two_of_three_experiment(self.R3, self.W, scenario, seq).passed

    def test_divergent_w_component_recombines(self):
        # Cauchy mod W, but the W-coordinate grows without bound
        seq = PointSequence("custom-affine", {"A": [[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 0, 0]], "b": [0, 1, 0]}, 60)
        rep = two_of_three_experiment(self.R3, self.W, "V,W=>Q", seq)
        assert rep.passed
        stages = {s["stage"]: s for s in rep.details["stages"]}
        assert stages["lift"]["pass"] and stages["ambient-limit"]["pass"]

    def test_non_cauchy_input_fails_its_stage(self):
        seq = PointSequence("alternating", {"v": [0, 1, 0]}, 30)
        rep = two_of_three_experiment(self.R3, self.W, "W,Q=>V", seq)
        assert not rep.passed and rep.witness["stage"] == "ambient-cauchy"

    def test_unknown_scenario(self):
        with pytest.raises(ValueError):
            two_of_three_experiment(self.R3, self.W, "Q=>V", PointSequence("constant", {"c": [0, 0, 0]}, 5))


class TestSigmaProduct:
    R1 = simple_space(1)

    def test_l1_product(self):
        prod = sigma_product(self.R1, self.R1, TAU_M, samples=200)
        assert prod.certificate.passed
        assert prod.nu([0.5, -1.25]) == unit_step(1.75)
        assert prod.nu([0, 0]) == EPS0
        assert all(r.passed for r in prod.dominance)

    def test_refusals(self):
        with pytest.raises(ValueError):
            sigma_product(self.R1, simple_space(1, "l2", TAU_PI, TAU_PI_STAR), TAU_M)
        with pytest.raises(ValueError):
            sigma_product(self.R1, c00_space(), TAU_M)
        with pytest.raises(ValueError, match="dominance"):
            sigma_product(self.R1, self.R1, TAU_W)

    def test_cauchy_factorization(self):
        prod = sigma_product(self.R1, self.R1, TAU_M, samples=100)
        seqs = [
            PointSequence("reciprocal", {"c": [0, 1], "v": [1, -1]}, 40),
            PointSequence("alternating", {"c": [0, 0], "v": [0, 1]}, 40),
            PointSequence("geometric", {"c": [1, 1], "v": [1, 2], "r": 0.8}, 40),
            PointSequence("constant", {"c": [3, 4]}, 40),
        ]
        rep = check_cauchy_factorization(prod, seqs)
        assert rep.passed
        lams, halves = (0.2, 0.1, 0.05), (0.1, 0.05, 0.025)
        for s in seqs:
            X = s.terms()
            parts = [explicit([x[:1] for x in X]), explicit([x[1:] for x in X])]
            # product Cauchy at lambda forces both factors; factors at lambda/2 force the product
            if is_strong_cauchy(prod, s, lams).passed:
                assert all(is_strong_cauchy(self.R1, f, lams).passed for f in parts)
            if all(is_strong_cauchy(self.R1, f, halves).passed for f in parts):
                assert is_strong_cauchy(prod, s, lams).passed

    def test_neighbourhoods_nest(self):
        prod = sigma_product(self.R1, simple_space(1), TAU_M, samples=50)
        assert check_product_neighborhoods(prod, samples=300).passed


class TestContinuityProbes:
    def test_modulus_table(self):
        rep = uniform_continuity_probe(Q2)
        table = dict(map(tuple, rep.details["modulus"]))
        assert rep.passed and rep.details["monotone"]
        assert table[0.025] <= 0.1
        assert table[0.1] <= 0.2

    def test_scalar_probe(self):
        p = [0.0, 1.0]
        rep = scalar_continuity_probe(Q2, p, [(1, 1), (1, 0.95), (1, 0.975), (2, 1.9875)])
        assert rep.passed and rep.details["proportional"]
        rows = sorted(rep.details["rows"], key=lambda r: r["gap"])
        assert rows[0]["ambient_dS"] == 0 and rows[0]["quotient_dS"] == 0
        assert rows[-1]["gap"] == pytest.approx(0.05) and rows[-1]["ambient_dS"] == pytest.approx(0.05)
        for r in rows:
            assert r["quotient_dS"] <= r["ambient_dS"]
