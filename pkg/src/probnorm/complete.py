"""Strong Cauchy detection, representative lifting and completeness experiments.

Completeness is not finitely decidable, so every routine here works up to
an explicit horizon and reports the horizon it used.  A sequence is called
Cauchy (convergent) up to horizon H when, for every tested lambda, the tail
index N(lambda) lies in the first ``tail_fraction`` of the sampled range.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .distfn import EPS0, DistFn, df_leq, df_margin, random_distfn, sibley, sibley_to_eps0, unit_step
from .pnspace import ROUNDOFF, PNSpace, VectorOps, check_axioms, in_strong_neighborhood
from .quotient import QuotientSpace, Subspace, coset_equal, nearest, restrict
from .report import Inconclusive, VerificationReport, WorstCase
from .trifn import TriangleFn, check_dominates

DEFAULT_LAMBDAS = (0.2, 0.1, 0.05)
SEQUENCE_RULES = ("constant", "reciprocal", "alternating", "geometric", "custom-affine", "explicit")


def _features(n: int) -> np.ndarray:
    return np.array([n, 1.0 / n, (-1.0) ** n, math.sin(n)])


@dataclass(eq=False)
class PointSequence:
    """A deterministic sequence p_1, p_2, ... given by a named rule.

    Rules and their parameters:

    ``constant`` c; ``reciprocal`` c + v/n; ``alternating`` c + (-1)^n v;
    ``geometric`` c + r^n v; ``custom-affine`` A phi(n) + b with
    phi(n) = (n, 1/n, (-1)^n, sin n); ``explicit`` a stored list of terms.
    """

    rule: str
    params: dict
    horizon: int

    def __post_init__(self):
        if self.rule not in SEQUENCE_RULES:
            raise ValueError(f"unknown sequence rule {self.rule!r}")
        if self.horizon < 2:
            raise ValueError("horizon must be at least 2")
        p = {k: np.asarray(v, dtype=float) for k, v in self.params.items()}
        if self.rule == "explicit" and len(p["terms"]) < self.horizon:
            raise ValueError("explicit sequence is shorter than its horizon")
        if self.rule == "custom-affine" and p["A"].shape != (len(p["b"]), 4):
            raise ValueError("custom-affine needs A of shape (dim, 4) and offset b of length dim")
        self._p = p

    def term(self, n: int) -> np.ndarray:
        if n < 1:
            raise ValueError("sequences are indexed from 1")
        p = self._p
        if self.rule == "constant":
            return p["c"].copy()
        if self.rule == "reciprocal":
            return p["c"] + p["v"] / n
        if self.rule == "alternating":
            return p.get("c", 0.0 * p["v"]) + (-1.0) ** n * p["v"]
        if self.rule == "geometric":
            return p["c"] + float(p["r"]) ** n * p["v"]
        if self.rule == "custom-affine":
            return p["A"] @ _features(n) + p["b"]
        return np.atleast_1d(p["terms"][n - 1]).copy()

    def terms(self, horizon: int | None = None) -> list[np.ndarray]:
        return [self.term(n) for n in range(1, (horizon or self.horizon) + 1)]

    def limit_mod(self, W: Subspace | None = None):
        """A representative of the limit coset when the rule determines one, else None."""
        p = self._p
        inW = (lambda v: not np.any(v)) if W is None else W.contains
        if self.rule == "constant":
            return p["c"].copy()
        if self.rule == "reciprocal" or (self.rule == "geometric" and abs(float(p["r"])) < 1):
            return p["c"].copy()
        if self.rule == "geometric" and inW(p["v"]):
            return p["c"].copy()
        if self.rule == "alternating" and inW(p["v"]):
            return p.get("c", 0.0 * p["v"]).copy()
        if self.rule == "custom-affine" and all(inW(p["A"][:, j]) for j in (0, 2, 3)):
            return p["b"].copy()
        return None


def explicit(terms) -> PointSequence:
    terms = [np.atleast_1d(np.asarray(t, dtype=float)) for t in terms]
    return PointSequence("explicit", {"terms": np.array(terms)}, len(terms))


def sequence_from_config(cfg: dict, horizon: int | None = None) -> PointSequence:
    params = {k: v for k, v in cfg.items() if k not in ("rule", "horizon")}
    return PointSequence(cfg["rule"], params, int(horizon or cfg.get("horizon", 100)))


def _tail_index(bad_indices, default: int = 1) -> int:
    """Least N such that no failing index is >= N."""
    return max(bad_indices, default=default - 1) + 1


def _check_lambdas(lambda_grid):
    if not lambda_grid or any(l <= 0 for l in lambda_grid):
        raise ValueError("lambda grid must be non-empty with positive entries")


def _pair_norms(space, X):
    return {(n, m): space.nu(space.sub(X[m - 1], X[n - 1]))
            for n in range(1, len(X) + 1) for m in range(n + 1, len(X) + 1)}


def is_strong_cauchy(space, seq: PointSequence, lambda_grid=DEFAULT_LAMBDAS, horizon: int | None = None,
                     tail_fraction: float = 0.5, pair_norms=None) -> VerificationReport:
    """Test nu_{p_m - p_n}(lambda) > 1 - lambda for all m, n >= N(lambda)."""
    _check_lambdas(lambda_grid)
    H = horizon or seq.horizon
    if H < 2:
        raise ValueError("horizon must be at least 2")
    nus = pair_norms if pair_norms is not None else _pair_norms(space, seq.terms(H))
    table, witness = {}, None
    for lam in lambda_grid:
        bad = [(n, m) for (n, m), F in nus.items() if not F(lam) > 1.0 - lam]
        N = _tail_index(n for n, _ in bad)
        table[lam] = N
        if N > tail_fraction * H and witness is None:
            n, m = max(bad)
            witness = {"lambda": lam, "n": n, "m": m, "nu": nus[(n, m)], "value_at_lambda": nus[(n, m)](lam)}
    passed = witness is None
    return VerificationReport(
        check="strong_cauchy",
        passed=passed,
        samples=len(nus),
        margin=min(tail_fraction * H - N for N in table.values()),
        witness=witness,
        details={"N": [[lam, N] for lam, N in table.items()], "horizon": H, "tail_fraction": tail_fraction,
                 "verdict": "Cauchy up to horizon" if passed else "not Cauchy up to horizon"},
    )


def strong_limit_check(space, seq: PointSequence, candidate, lambda_grid=DEFAULT_LAMBDAS,
                       horizon: int | None = None, tail_fraction: float = 0.5) -> VerificationReport:
    """Per-lambda least index after which p_n stays in N_candidate(lambda)."""
    _check_lambdas(lambda_grid)
    H = horizon or seq.horizon
    X = seq.terms(H)
    nus = [space.nu(space.sub(x, candidate)) for x in X]
    table, witness = {}, None
    for lam in lambda_grid:
        bad = [n for n, F in enumerate(nus, start=1) if not F(lam) > 1.0 - lam]
        N = _tail_index(bad)
        table[lam] = N
        if N > tail_fraction * H and witness is None:
            witness = {"lambda": lam, "n": bad[-1], "term": X[bad[-1] - 1], "candidate": candidate}
    return VerificationReport(
        check="strong_limit",
        passed=witness is None,
        samples=H,
        margin=min(tail_fraction * H - N for N in table.values()),
        witness=witness,
        details={"entry_index": [[lam, N] for lam, N in table.items()], "horizon": H, "tail_fraction": tail_fraction},
    )


def lift_representative(Q: QuotientSpace, p, eps: float) -> np.ndarray:
    """p' in p + W with d_S(nu_p', eps0) < d_S(nu-bar_{p+W}, eps0) + eps."""
    if not eps > 0:
        raise ValueError("eps must be positive")
    p = Q.coerce(p)
    target = sibley_to_eps0(Q.nu(p)) + eps
    best = None
    for cand in Q.representatives(p):
        d = sibley_to_eps0(Q.ambient.nu(cand))
        if best is None or d < best[0]:
            best = (d, cand)
        if d < target and coset_equal(cand, p, Q.W):
            return cand
    raise Inconclusive("no representative reached the lifting target", best=None if best is None else best[1],
                       stage="lift_representative")


def lift_with_floor(Q: QuotientSpace, p, G: DistFn, atol: float = ROUNDOFF) -> np.ndarray:
    """p' in p + W with nu_p' >= tau(nu-bar_{p+W}, G), given nu-bar_{p+W} >= G."""
    if G == EPS0:
        raise ValueError("G must differ from eps0")
    p = Q.coerce(p)
    bar = Q.nu(p)
    if not df_leq(G, bar, atol):
        raise ValueError("precondition nu-bar_{p+W} >= G fails")
    floor = Q.tau(bar, G)
    best = None
    for cand in Q.representatives(p):
        m = df_margin(floor, Q.ambient.nu(cand), atol)
        if best is None or m > best[0]:
            best = (m, cand)
        if m >= 0 and coset_equal(cand, p, Q.W):
            return cand
    raise Inconclusive("no representative cleared the floor", best=None if best is None else best[1],
                       stage="lift_with_floor")


def sample_ball(rng: np.random.Generator, radius: float) -> DistFn:
    """A random member of the open ball {F : d_S(F, eps0) < radius}."""
    while True:
        if rng.random() < 0.4:
            F = unit_step(radius * float(rng.choice([rng.random(), 0.999, 0.0])))
        else:
            h0 = radius * float(rng.uniform(0.05, 1.0))
            x_star = h0 * float(rng.random())
            v_star = 1.0 - h0 * float(rng.random())
            xs, vs = [x_star], [v_star]
            if rng.random() < 0.5 and x_star > 0:
                xs.insert(0, x_star * float(rng.uniform(0.1, 0.9)))
                vs.insert(0, v_star * float(rng.random()))
            if rng.random() < 0.7 and v_star < 1:
                xs.append(x_star + float(rng.uniform(0.01, 3.0)))
                vs.append(float(rng.uniform(v_star, 1.0)))
            F = DistFn(tuple(xs), tuple(vs))
        if sibley_to_eps0(F) < radius:
            return F


@dataclass
class DeltaSchedule:
    """delta_1 > delta_2 > ... such that tau maps delta_n-ball pairs into the min(1/n, delta_{n-1})-ball."""

    tau: TriangleFn
    deltas: tuple[float, ...]
    evidence: list = field(default_factory=list)

    def __post_init__(self):
        d = self.deltas
        if not d or any(x <= 0 for x in d) or any(a <= b for a, b in zip(d, d[1:])):
            raise ValueError("deltas must be positive and strictly decreasing")

    @property
    def depth(self) -> int:
        return len(self.deltas)

    def target(self, n: int) -> float:
        return 1.0 if n == 1 else min(1.0 / n, self.deltas[n - 2])

    def validate(self, draws: int = 1000, seed: int = 1) -> VerificationReport:
        rng = np.random.default_rng(seed)
        worst = WorstCase()
        for n, delta in enumerate(self.deltas, start=1):
            target = self.target(n)
            for _ in range(draws):
                F, G = sample_ball(rng, delta), sample_ball(rng, delta)
                d = sibley_to_eps0(self.tau(F, G))
                worst.update(target - d, lambda: {"level": n, "F": F, "G": G, "dS": d, "target": target})
        ok = worst.margin > 0
        return VerificationReport("delta_schedule", ok, samples=draws * self.depth, seed=seed, margin=worst.value,
                                  witness=None if ok else worst.witness, details={"deltas": list(self.deltas)})


def build_delta_schedule(tau: TriangleFn, depth: int, samples_per_ball: int = 200, seed: int = 0) -> DeltaSchedule:
    """Greedy halving search for each delta_n against sampled ball pairs."""
    if depth < 1:
        raise ValueError("depth must be at least 1")
    rng = np.random.default_rng(seed)
    deltas, evidence = [0.5], [{"level": 1, "delta": 0.5, "target": 1.0}]
    for n in range(2, depth + 1):
        target = min(1.0 / n, deltas[-1])
        cand = deltas[-1] / 2
        while True:
            if cand < 1e-12:
                raise ValueError(f"delta underflow at level {n}: tau too weak at the sampled resolution")
            pairs = [(sample_ball(rng, cand), sample_ball(rng, cand)) for _ in range(samples_per_ball)]
            worst = max(sibley_to_eps0(tau(F, G)) for F, G in pairs)
            if worst < target:
                break
            cand /= 2
        deltas.append(cand)
        evidence.append({"level": n, "delta": cand, "target": target, "worst_dS": worst, "samples": samples_per_ball})
    return DeltaSchedule(tau, tuple(deltas), evidence)


@dataclass
class LiftResult:
    indices: list[int]
    lifted: PointSequence
    report: VerificationReport


def lift_cauchy_sequence(Q: QuotientSpace, quotient_seq: PointSequence, schedule: DeltaSchedule,
                         horizon: int | None = None) -> LiftResult:
    """Subsequence with d_S(nu-bar_{a_{n_i} - a_{n_{i+1}}}) < delta_{i+1}, lifted to x_i with the same bound in V."""
    H = horizon or quotient_seq.horizon
    A = quotient_seq.terms(H)
    nus = _pair_norms(Q, A)
    pre = is_strong_cauchy(Q, quotient_seq, horizon=H, pair_norms=nus)
    if not pre.passed:
        raise ValueError(f"quotient sequence is not strong Cauchy up to horizon {H}")
    D = {k: sibley_to_eps0(F) for k, F in nus.items()}

    def tail(delta):
        return _tail_index(n for (n, _), d in D.items() if not d < delta)

    deltas = schedule.deltas
    indices = []
    for i in range(1, schedule.depth + 1):
        n_i = max(tail(deltas[min(i, schedule.depth - 1)]), indices[-1] + 1 if indices else 1)
        if n_i > H:
            raise Inconclusive(f"horizon {H} exhausted while selecting subsequence term {i}", best=indices,
                               stage="subsequence")
        indices.append(n_i)

    xs = [lift_representative(Q, A[indices[0] - 1], 1.0)]
    for i in range(1, len(indices)):
        z = Q.sub(xs[-1], A[indices[i] - 1])
        gap = deltas[i] - sibley_to_eps0(Q.nu(z))
        if not gap > 0:
            raise AssertionError(f"subsequence relation broken at i={i}")
        xs.append(Q.sub(xs[-1], lift_representative(Q, z, gap)))

    space = Q.ambient
    worst = {"eq2": WorstCase(), "eq3": WorstCase(), "coset": WorstCase(), "chain": WorstCase()}
    for i in range(len(xs) - 1):
        d2 = D[(indices[i], indices[i + 1])]
        worst["eq2"].update(deltas[i + 1] - d2, lambda: {"i": i + 1, "dS": d2})
        d3 = sibley_to_eps0(space.nu(space.sub(xs[i], xs[i + 1])))
        worst["eq3"].update(deltas[i + 1] - d3, lambda: {"i": i + 1, "dS": d3})
    for i, (n_i, x) in enumerate(zip(indices, xs), start=1):
        worst["coset"].update(0.0 if coset_equal(x, A[n_i - 1], Q.W) else -1.0, lambda: {"i": i, "x": x})
    for n in range(1, len(xs) + 1):
        for m in range(n + 1, len(xs) + 1):
            d = sibley_to_eps0(space.nu(space.sub(xs[m - 1], xs[n - 1])))
            worst["chain"].update(1.0 / n - d, lambda: {"n": n, "m": m, "dS": d})
    margins = {k: w.value for k, w in worst.items()}
    strict = {k: (w.value is None or w.value > 0) for k, w in worst.items()}
    strict["coset"] = worst["coset"].value in (None, 0.0)
    passed = all(strict.values())
    failing = next((k for k, ok in strict.items() if not ok), None)
    report = VerificationReport(
        check="lift_cauchy_sequence",
        passed=passed,
        samples=len(xs),
        margin=min((v for k, v in margins.items() if k != "coset" and v is not None), default=None),
        witness=None if passed else {"relation": failing, **worst[failing].witness},
        details={"indices": indices, "deltas": list(deltas), "margins": margins, "horizon": H},
    )
    return LiftResult(indices, explicit(xs), report)


SCENARIOS = ("V,W=>Q", "V,Q=>W", "W,Q=>V")


def _stage(name, report: VerificationReport | None = None, passed: bool | None = None, **info):
    entry = {"stage": name, "pass": report.passed if passed is None else passed}
    if report is not None:
        entry["report"] = report.to_dict()
    entry.update(info)
    return entry


def _limit_or_last(seq: PointSequence, W, H):
    lim = seq.limit_mod(W)
    return (lim, "rule") if lim is not None else (seq.term(H), "last term")


def two_of_three_experiment(space: PNSpace, W: Subspace, scenario: str, seq: PointSequence,
                            horizon: int | None = None, lambda_grid=DEFAULT_LAMBDAS,
                            schedule_depth: int = 6, seed: int = 0) -> VerificationReport:
    """Run the constructive steps behind 'two complete spaces force the third' at desk scale.

    ``seq`` is a test Cauchy sequence in the space not assumed complete:
    the quotient for ``V,W=>Q``, W for ``V,Q=>W`` and V for ``W,Q=>V``.
    """
    if scenario not in SCENARIOS:
        raise ValueError(f"unknown scenario {scenario!r}; expected one of {SCENARIOS}")
    H = horizon or seq.horizon
    seq = explicit(seq.terms(H)) if seq.rule == "explicit" else PointSequence(seq.rule, seq.params, H)
    Q = QuotientSpace(space, W, "exact")
    Wsp = restrict(space, W)
    stages = []
    try:
        if scenario == "W,Q=>V":
            _run_wq_v(space, W, Q, Wsp, seq, H, lambda_grid, stages)
        elif scenario == "V,W=>Q":
            _run_vw_q(space, W, Q, seq, H, lambda_grid, schedule_depth, seed, stages)
        else:
            _run_vq_w(space, W, Q, Wsp, seq, H, lambda_grid, stages)
    except Inconclusive as exc:
        stages.append({"stage": exc.stage or "unknown", "pass": False, "inconclusive": str(exc)})
        return VerificationReport(f"two_of_three[{scenario}]", False, samples=H, inconclusive=True,
                                  details={"scenario": scenario, "horizon": H, "stages": stages})
    failing = next((s for s in stages if not s["pass"]), None)
    return VerificationReport(
        check=f"two_of_three[{scenario}]",
        passed=failing is None,
        samples=H,
        witness=None if failing is None else failing,
        details={"scenario": scenario, "horizon": H, "lambda_grid": list(lambda_grid), "stages": stages},
    )


def _run_wq_v(space, W, Q, Wsp, seq, H, lambdas, stages):
    X = seq.terms(H)
    amb = _pair_norms(space, X)
    stages.append(_stage("ambient-cauchy", is_strong_cauchy(space, seq, lambdas, H, pair_norms=amb)))
    quo = _pair_norms(Q, X)
    worst = min(df_margin(amb[k], quo[k], ROUNDOFF) for k in amb)
    stages.append(_stage("projection-dominates", passed=worst >= 0, margin=worst + 0.0))
    stages.append(_stage("projection-cauchy", is_strong_cauchy(Q, seq, lambdas, H, pair_norms=quo)))

    lim, source = _limit_or_last(seq, W, H)
    q = Q.canonical(lim)
    stages.append(_stage("quotient-limit", strong_limit_check(Q, seq, q, lambdas, H), q=q, source=source))

    Hs, qs, floor_margin = [], [], math.inf
    for n, p in enumerate(X, start=1):
        diff = space.sub(p, q)
        bar = Q.nu(diff)
        d_n = bar.saturation_point()
        if not math.isfinite(d_n):
            raise Inconclusive(f"quotient norm of term {n} never saturates", stage="H_n floor")
        H_n = unit_step(d_n + 1.0 / n)
        if not (df_leq(H_n, bar) and H_n != bar):
            floor_margin = -1.0
        Hs.append(H_n)
        qn = lift_with_floor(Q, diff, H_n)
        floor_margin = min(floor_margin, df_margin(Q.tau(bar, H_n), space.nu(qn), ROUNDOFF))
        qs.append(qn)
    h_dist = [sibley_to_eps0(F) for F in Hs]
    h_tail = {lam: _tail_index(n for n, d in enumerate(h_dist, start=1) if not d < lam) for lam in lambdas}
    stages.append(_stage("H_n floor", passed=floor_margin >= 0 and all(N <= H / 2 for N in h_tail.values()),
                         margin=floor_margin + 0.0, H_tail=[[k, v] for k, v in h_tail.items()]))
    qseq = explicit(qs)
    stages.append(_stage("correction-to-theta", strong_limit_check(space, qseq, space.zero(), lambdas, H)))

    rs = [space.sub(space.sub(p, qn), q) for p, qn in zip(X, qs)]
    in_W = all(W.contains(r) for r in rs)
    rseq = explicit(rs)
    stages.append(_stage("W-cauchy", is_strong_cauchy(Wsp, rseq, lambdas, H), in_W=in_W))
    if not in_W:
        stages[-1]["pass"] = False
    L, source = _limit_or_last(seq, None, H)
    r = space.sub(L, q)
    stages.append(_stage("W-limit", strong_limit_check(Wsp, rseq, r, lambdas, H), r=r, source=source))
    if not W.contains(r):
        stages[-1]["pass"] = False
    stages.append(_stage("recombination", strong_limit_check(space, seq, space.add(r, q), lambdas, H)))


def _run_vw_q(space, W, Q, seq, H, lambdas, depth, seed, stages):
    stages.append(_stage("quotient-cauchy", is_strong_cauchy(Q, seq, lambdas, H)))
    schedule = build_delta_schedule(Q.tau, depth, seed=seed)
    lift = lift_cauchy_sequence(Q, seq, schedule, H)
    stages.append(_stage("lift", lift.report, indices=lift.indices))
    xs = lift.lifted.terms()
    lim, source = _limit_or_last(seq, W, H)
    # point of lim + W nearest the last lifted term
    x_star = space.sub(xs[-1], nearest(space.sub(xs[-1], lim), W, "l2")[1])
    dists = [sibley_to_eps0(space.nu(space.sub(x, x_star))) for x in xs]
    stages.append(_stage("ambient-limit", passed=all(d <= 1.0 / i for i, d in enumerate(dists, start=1)),
                         x=x_star, source=source, lifted_dS=dists))
    stages.append(_stage("projected-limit", strong_limit_check(Q, seq, x_star, lambdas, H)))


def _run_vq_w(space, W, Q, Wsp, seq, H, lambdas, stages):
    X = seq.terms(H)
    in_W = all(W.contains(x) for x in X)
    stages.append(_stage("W-cauchy", is_strong_cauchy(Wsp, seq, lambdas, H), in_W=in_W))
    if not in_W:
        stages[-1]["pass"] = False
    stages.append(_stage("ambient-cauchy", is_strong_cauchy(space, seq, lambdas, H)))
    lim, source = _limit_or_last(seq, None, H)
    stages.append(_stage("ambient-limit", strong_limit_check(space, seq, lim, lambdas, H), limit=lim, source=source))
    closed = bool(W.contains(lim)) and Q.nu(lim) == EPS0
    stages.append(_stage("limit-in-W", passed=closed, limit=lim))


@dataclass(eq=False)
class ProductSpace(VectorOps):
    """V1 x V2 with nu(p, q) = sigma(nu1(p), nu2(q)); vectors are concatenations."""

    left: PNSpace
    right: PNSpace
    sigma: TriangleFn
    dominance: list = field(default_factory=list)
    certificate: VerificationReport | None = None

    @property
    def split(self) -> int:
        return self.left.dim

    @property
    def dim(self) -> int:
        return self.left.dim + self.right.dim

    @property
    def tau(self):
        return self.left.tau

    @property
    def tau_star(self):
        return self.left.tau_star

    def coerce(self, p):
        p = np.atleast_1d(np.asarray(p, dtype=float))
        if p.shape != (self.dim,) or not np.all(np.isfinite(p)):
            raise ValueError(f"expected a finite vector of length {self.dim}")
        return p

    def parts(self, p):
        p = self.coerce(p)
        return p[: self.split], p[self.split:]

    def zero(self):
        return np.zeros(self.dim)

    def is_zero(self, p):
        return not np.any(self.coerce(p))

    def nu(self, p) -> DistFn:
        a, b = self.parts(p)
        return self.sigma(self.left.nu(a), self.right.nu(b))

    def random_vector(self, rng, scale: float = 2.0):
        return np.concatenate([self.left.random_vector(rng, scale), self.right.random_vector(rng, scale)])


def _random_quadruples(rng, count):
    return [tuple(random_distfn(rng) for _ in range(4)) for _ in range(count)]


def sigma_product(left: PNSpace, right: PNSpace, sigma: TriangleFn, samples: int = 500, seed: int = 0,
                  dominance_samples: int = 100) -> ProductSpace:
    """The sigma-product, built only when tau* >> sigma and sigma >> tau hold on samples."""
    if left.c00 or right.c00:
        raise ValueError("sigma-products are built from finite-dimensional factors")
    if (left.tau, left.tau_star) != (right.tau, right.tau_star):
        raise ValueError("factors must share (tau, tau*)")
    rng = np.random.default_rng(seed)
    quads = _random_quadruples(rng, dominance_samples)
    evidence = [check_dominates(left.tau_star, sigma, quads, seed), check_dominates(sigma, left.tau, quads, seed)]
    for rep in evidence:
        if not rep.passed:
            raise ValueError(f"dominance evidence failed ({rep.details.get('pair')}); construction refused")
    prod = ProductSpace(left, right, sigma, evidence)
    prod.certificate = check_axioms(prod, samples, seed)
    return prod


def _tail_table(space, seq, lambdas, H=None):
    rep = is_strong_cauchy(space, seq, lambdas, H)
    return dict((lam, N) for lam, N in rep.details["N"])


def check_cauchy_factorization(prod: ProductSpace, seqs, lambda_grid=DEFAULT_LAMBDAS) -> VerificationReport:
    """Cauchy in the product exactly when Cauchy in both factors, in tail-index form.

    With N(lambda) the tail index of a sequence, the check asserts
    N_prod(lambda) >= max(N_1(lambda), N_2(lambda)) and
    N_prod(lambda) <= max(N_1(lambda/2), N_2(lambda/2)), which is the
    horizon-free content of the equivalence for sigma <= tau_M.
    """
    rows, witness = [], None
    lambdas = sorted(set(lambda_grid) | {l / 2 for l in lambda_grid})
    for k, seq in enumerate(seqs):
        X = seq.terms()
        whole = _tail_table(prod, seq, lambdas)
        a = _tail_table(prod.left, explicit([x[: prod.split] for x in X]), lambdas)
        b = _tail_table(prod.right, explicit([x[prod.split:] for x in X]), lambdas)
        ok = all(max(a[l], b[l]) <= whole[l] <= max(a[l / 2], b[l / 2]) for l in lambda_grid)
        rows.append({"sequence": k, "rule": seq.rule, "ok": ok,
                     "N": [[l, whole[l], a[l], b[l], a[l / 2], b[l / 2]] for l in lambda_grid]})
        if not ok and witness is None:
            witness = rows[-1]
    return VerificationReport("cauchy_factorization", witness is None, samples=len(rows), witness=witness,
                              details={"rows": rows, "columns": ["lambda", "N_prod", "N_1", "N_2", "N_1(l/2)",
                                                                 "N_2(l/2)"]})


def check_product_neighborhoods(prod: ProductSpace, samples: int = 200, seed: int = 0) -> VerificationReport:
    """Product neighbourhoods nest with factor cylinders: N(t) inside C(t) and C(t/2) inside N(t).

    C(t) = N1(t) x N2(t).  Literal equality fails already for the l1-type
    product of simple spaces, so the topological form is tested.
    """
    rng = np.random.default_rng(seed)
    fails = 0
    witness = None
    for _ in range(samples):
        p = prod.random_vector(rng)
        q = prod.add(p, prod.random_vector(rng, scale=float(rng.choice([0.05, 0.3, 1.0]))))
        t = float(rng.uniform(0.02, 1.0))
        (p1, p2), (q1, q2) = prod.parts(p), prod.parts(q)

        def cyl(s):
            return in_strong_neighborhood(prod.left, p1, s, q1) and in_strong_neighborhood(prod.right, p2, s, q2)

        inside = in_strong_neighborhood(prod, p, t, q)
        if (inside and not cyl(t)) or (cyl(t / 2) and not inside):
            fails += 1
            if witness is None:
                witness = {"p": p, "q": q, "t": t}
    return VerificationReport("product_neighborhoods", fails == 0, samples=samples, seed=seed, witness=witness,
                              details={"failures": fails})


def uniform_continuity_probe(Q: QuotientSpace, pairs=None, eta_grid=(0.2, 0.1, 0.05, 0.025), samples: int = 40,
                             seed: int = 0, final_tol: float = 0.1) -> VerificationReport:
    """Modulus table h(eta) = max d_S(nu-bar_{pi(p-q)}, nu-bar_{pi(p'-q')}) over p' in N_p(eta), q' in N_q(eta)."""
    space = Q.ambient
    rng = np.random.default_rng(seed)
    if pairs is None:
        pairs = [(space.random_vector(rng), space.random_vector(rng)) for _ in range(samples)]
    dirs = [(space.random_vector(rng), space.random_vector(rng)) for _ in pairs]

    def perturb(p, u, eta):
        n = space.norm(u) if hasattr(space, "norm") else 1.0
        step = space.scale(0.999 * eta / n, u) if n > 0 else space.zero()
        while not in_strong_neighborhood(space, p, eta, space.add(p, step)):
            step = space.scale(0.5, step)
        return space.add(p, step)

    table = []
    for eta in eta_grid:
        h = 0.0
        for (p, q), (u, v) in zip(pairs, dirs):
            p2, q2 = perturb(p, u, eta), perturb(q, v, eta)
            h = max(h, sibley(Q.nu(space.sub(p, q)), Q.nu(space.sub(p2, q2))))
        table.append([eta, h])
    order = sorted(table, key=lambda r: -r[0])
    monotone = all(b[1] <= a[1] + 1e-8 for a, b in zip(order, order[1:]))
    final_ok = order[-1][1] <= final_tol
    ok = monotone and final_ok
    return VerificationReport(
        "uniform_continuity", ok, samples=len(pairs), seed=seed, margin=final_tol - order[-1][1],
        witness=None if ok else {"table": table, "monotone": monotone},
        details={"modulus": table, "monotone": monotone, "final_tol": final_tol},
    )


def scalar_continuity_probe(Q: QuotientSpace, p, alpha_beta_pairs, rtol: float = 1e-6) -> VerificationReport:
    """d_S(nu-bar_{pi((a-b)p)}, eps0) <= d_S(nu_{(a-b)p}, eps0), and the latter shrinks with |a-b|."""
    space = Q.ambient
    p = space.coerce(p)
    rows, worst = [], WorstCase()
    for a, b in alpha_beta_pairs:
        v = space.scale(a - b, p)
        dq, da = sibley_to_eps0(Q.nu(v)), sibley_to_eps0(space.nu(v))
        rows.append({"alpha": a, "beta": b, "gap": abs(a - b), "quotient_dS": dq, "ambient_dS": da,
                     "pair_dS": sibley(Q.nu(space.scale(a, p)), Q.nu(space.scale(b, p)))})
        worst.update(da - dq, lambda: rows[-1])
    by_gap = sorted(rows, key=lambda r: r["gap"])
    monotone = all(x["ambient_dS"] <= y["ambient_dS"] for x, y in zip(by_gap, by_gap[1:]))
    ratios = [r["ambient_dS"] / r["gap"] for r in by_gap if r["gap"] > 0 and r["ambient_dS"] < 1.0]
    proportional = bool(ratios) and (max(ratios) - min(ratios)) <= rtol * max(ratios)
    ok = worst.margin >= -1e-12 and monotone
    return VerificationReport(
        "scalar_continuity", ok, samples=len(rows), margin=worst.value,
        witness=None if ok else (worst.witness if worst.margin < -1e-12 else {"monotone": False}),
        details={"rows": rows, "monotone": monotone, "proportional": proportional, "ratios": ratios},
    )
