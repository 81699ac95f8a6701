"""Concrete PN spaces over R^n and c00, axiom checkers and strong neighbourhoods.

Every probabilistic norm implemented here is radial: nu_p depends only on a
classical norm ||p|| through a profile n -> DistFn.  Vectors are plain 1-d
numpy arrays; c00 vectors are arrays of any length, zero-padded on demand.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .distfn import EPS0, DistFn, df_equiv, df_margin, scaled, sibley_to_eps0, unit_step
from .report import VerificationReport, WorstCase
from .trifn import TAU_M, TAU_M_STAR, TriangleFn, check_eps_calculus, check_order

NORM_ORDS = {"l1": 1, "l2": 2, "linf": np.inf}
RULES = ("simple", "serstnev", "squared")
ROUNDOFF = 1e-9  # abscissa slack for comparing d.f.'s built from rounded norms


def classical_norm(p: np.ndarray, norm_kind: str) -> float:
    p = np.asarray(p, dtype=float)
    if p.size == 0:
        return 0.0
    return float(np.linalg.norm(p, NORM_ORDS[norm_kind]))


def pad(p: np.ndarray, q: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    n = max(len(p), len(q))
    return np.pad(p, (0, n - len(p))), np.pad(q, (0, n - len(q)))


class VectorOps:
    """Linear operations shared by every space-like object."""

    c00 = False

    def coerce(self, p) -> np.ndarray:
        return np.atleast_1d(np.asarray(p, dtype=float))

    def add(self, p, q) -> np.ndarray:
        p, q = self.coerce(p), self.coerce(q)
        if self.c00:
            p, q = pad(p, q)
        return p + q

    def sub(self, p, q) -> np.ndarray:
        return self.add(p, -self.coerce(q))

    def scale(self, a: float, p) -> np.ndarray:
        return a * self.coerce(p)

    def neg(self, p) -> np.ndarray:
        return -self.coerce(p)


@dataclass(frozen=True)
class PNSpace(VectorOps):
    """(V, nu, tau, tau*) with nu_p = profile(||p||)."""

    kind: str  # "finite" or "c00"
    dim: int | None
    norm_kind: str
    rule: str
    tau: TriangleFn = TAU_M
    tau_star: TriangleFn = TAU_M_STAR
    F0: DistFn | None = None
    certificate: VerificationReport | None = field(default=None, compare=False, repr=False)

    def __post_init__(self):
        if self.kind not in ("finite", "c00"):
            raise ValueError(f"unknown space kind {self.kind!r}")
        if self.kind == "finite" and not (isinstance(self.dim, int) and self.dim >= 1):
            raise ValueError("finite-dimensional spaces need dim >= 1")
        if self.norm_kind not in NORM_ORDS:
            raise ValueError(f"unknown norm {self.norm_kind!r}; choose from {sorted(NORM_ORDS)}")
        if self.rule not in RULES:
            raise ValueError(f"unknown probabilistic-norm rule {self.rule!r}")
        if self.rule == "serstnev" and self.F0 is None:
            raise ValueError("the serstnev rule needs F0")

    @property
    def c00(self) -> bool:
        return self.kind == "c00"

    def coerce(self, p) -> np.ndarray:
        p = np.atleast_1d(np.asarray(p, dtype=float))
        if p.ndim != 1:
            raise ValueError("vectors must be one-dimensional")
        if not self.c00 and p.shape != (self.dim,):
            raise ValueError(f"expected a vector of dimension {self.dim}, got shape {p.shape}")
        if not np.all(np.isfinite(p)):
            raise ValueError("vector coordinates must be finite")
        return p

    def zero(self) -> np.ndarray:
        return np.zeros(0 if self.c00 else self.dim)

    def is_zero(self, p) -> bool:
        return not np.any(self.coerce(p))

    def norm(self, p) -> float:
        return classical_norm(self.coerce(p), self.norm_kind)

    def norms(self, P: np.ndarray) -> np.ndarray:
        """Row-wise classical norms of a batch of vectors."""
        return np.linalg.norm(P, NORM_ORDS[self.norm_kind], axis=1)

    def profile(self, n: float) -> DistFn:
        if self.rule == "simple":
            return unit_step(n)
        if self.rule == "squared":
            return unit_step(n * n)
        return EPS0 if n == 0 else scaled(self.F0, n)

    def profile_jumps(self, norms: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Pooled (breakpoint, value) pairs of profile(n) for every n in norms."""
        norms = np.asarray(norms, dtype=float)
        if self.rule == "simple":
            return norms, np.ones_like(norms)
        if self.rule == "squared":
            return norms * norms, np.ones_like(norms)
        zero = norms == 0
        xs = np.outer(norms[~zero], self.F0.xs).ravel()
        vs = np.tile(self.F0.vs, int(np.count_nonzero(~zero)))
        return np.concatenate([xs, np.zeros(np.count_nonzero(zero))]), np.concatenate([vs, np.ones(np.count_nonzero(zero))])

    def nu(self, p) -> DistFn:
        return self.profile(self.norm(p))

    def random_vector(self, rng: np.random.Generator, scale: float = 2.0) -> np.ndarray:
        n = int(rng.integers(1, 9)) if self.c00 else self.dim
        p = rng.uniform(-scale, scale, n)
        if n > 1 and rng.random() < 0.2:
            p[rng.random(n) < 0.5] = 0.0
        return p

    def certified(self, samples: int = 500, seed: int = 0) -> "PNSpace":
        return dataclasses.replace(self, certificate=check_axioms(self, samples, seed))

    def describe(self) -> dict:
        out = {"kind": self.kind, "dim": self.dim, "norm": self.norm_kind, "rule": self.rule,
               "tau": self.tau.name, "tau_star": self.tau_star.name}
        if self.F0 is not None:
            out["F0"] = self.F0
        return out


def _check_triangle_pair(tau: TriangleFn, tau_star: TriangleFn, need_eps_sum: bool) -> None:
    from .distfn import random_distfn

    rng = np.random.default_rng(0)
    if need_eps_sum:
        ab = rng.uniform(0.0, 10.0, size=(20, 2))
        for t in (tau, tau_star):
            if not check_eps_calculus(t, ab):
                raise ValueError(f"{t.name} does not satisfy tau(eps_a, eps_b) = eps_(a+b)")
    pairs = [(random_distfn(rng), random_distfn(rng)) for _ in range(20)]
    if not check_order(tau, tau_star, pairs):
        raise ValueError(f"{tau.name} <= {tau_star.name} fails on sampled pairs")


def simple_space(dim: int, norm_kind: str = "l2", tau: TriangleFn = TAU_M, tau_star: TriangleFn = TAU_M_STAR) -> PNSpace:
    """nu_p = eps_||p|| on R^dim."""
    _check_triangle_pair(tau, tau_star, need_eps_sum=True)
    return PNSpace("finite", dim, norm_kind, "simple", tau, tau_star)


def serstnev_simple_space(dim: int, norm_kind: str, F0: DistFn, tau: TriangleFn = TAU_M,
                          tau_star: TriangleFn = TAU_M_STAR) -> PNSpace:
    """nu_theta = eps0 and nu_p(x) = F0(x / ||p||) otherwise."""
    if not F0.in_d_plus:
        raise ValueError("F0 must belong to D+ (left limit 1 at +inf)")
    if F0.is_eps0:
        raise ValueError("F0 = eps0 would make every vector null")
    _check_triangle_pair(tau, tau_star, need_eps_sum=False)
    return PNSpace("finite", dim, norm_kind, "serstnev", tau, tau_star, F0)


def c00_space(norm_kind: str = "linf", tau: TriangleFn = TAU_M, tau_star: TriangleFn = TAU_M_STAR) -> PNSpace:
    """Finitely supported sequences with nu_p = eps_||p||."""
    _check_triangle_pair(tau, tau_star, need_eps_sum=True)
    return PNSpace("c00", None, norm_kind, "simple", tau, tau_star)


def _alphas(rng: np.random.Generator, samples: int) -> np.ndarray:
    fixed = np.array([0.0, 1.0, 0.5])
    return np.concatenate([fixed, rng.uniform(0.0, 1.0, max(samples - 3, 0))])[: max(samples, 3)]


def _sample_pairs(space, rng: np.random.Generator, samples: int):
    """Independent pairs mixed with collinear, opposite and null ones."""
    for k in range(samples):
        p = space.random_vector(rng)
        mode = k % 5
        if mode == 1:
            q = space.scale(float(rng.uniform(-2.0, 2.0)), p)
        elif mode == 2:
            q = space.neg(p)
        elif mode == 3 and k % 15 == 3:
            q = space.zero()
        else:
            q = space.random_vector(rng)
        yield p, q


def check_axioms(space, samples: int = 500, seed: int = 0, pairs=None, atol: float = ROUNDOFF) -> VerificationReport:
    """Sampled check of N1-N4.

    Margins: N1 uses d_S(nu_p, eps0) on p != theta (must be > 0); N2 is 0 on
    structural equality and -1 otherwise; N3 and N4 use the most violated
    pointwise gap of the required inequality.
    """
    if samples < 1:
        raise ValueError("samples must be >= 1")
    rng = np.random.default_rng(seed)
    tau, tau_star = space.tau, space.tau_star
    worst = {ax: WorstCase() for ax in ("N1", "N2", "N3", "N4")}

    theta = space.zero()
    nu_theta = space.nu(theta)
    if nu_theta != EPS0:
        worst["N1"].update(-1.0, lambda: {"p": theta, "nu_p": nu_theta})

    all_pairs = list(pairs or []) + list(_sample_pairs(space, rng, samples))
    alphas = _alphas(rng, len(all_pairs))
    for k, (p, q) in enumerate(all_pairs):
        nu_p, nu_q = space.nu(p), space.nu(q)
        if not space.is_zero(p):
            d = sibley_to_eps0(nu_p)
            worst["N1"].update(d, lambda: {"p": p, "nu_p": nu_p})
        nu_neg = space.nu(space.neg(p))
        worst["N2"].update(0.0 if nu_neg == nu_p else -1.0, lambda: {"p": p, "nu_p": nu_p, "nu_-p": nu_neg})

        lhs = space.nu(space.add(p, q))
        rhs = tau(nu_p, nu_q)
        worst["N3"].update(df_margin(rhs, lhs, atol), lambda: {"p": p, "q": q, "nu_p+q": lhs, "tau": rhs})

        a = float(alphas[k])
        star = tau_star(space.nu(space.scale(a, p)), space.nu(space.scale(1.0 - a, p)))
        worst["N4"].update(df_margin(nu_p, star, atol), lambda: {"p": p, "alpha": a, "nu_p": nu_p, "tau_star": star})

    ok = {
        "N1": worst["N1"].margin > 0,
        "N2": worst["N2"].margin >= 0,
        "N3": worst["N3"].margin >= 0,
        "N4": worst["N4"].margin >= 0,
    }
    failing = [ax for ax in ok if not ok[ax]]
    margins = {ax: worst[ax].value for ax in worst}
    witness = None
    if failing:
        witness = {"axiom": failing[0], **worst[failing[0]].witness}
    return VerificationReport(
        check="axioms",
        passed=not failing,
        samples=len(all_pairs),
        seed=seed,
        margin=min(m for m in margins.values() if m is not None),
        witness=witness,
        details={"margins": margins, "passed": ok},
    )


def check_serstnev(space, samples: int = 200, seed: int = 0, atol: float = ROUNDOFF) -> VerificationReport:
    """nu_p = tau_M(nu_{alpha p}, nu_{(1-alpha) p}) up to abscissa round-off."""
    rng = np.random.default_rng(seed)
    alphas = _alphas(rng, samples)
    failures = []
    for k in range(len(alphas)):
        p = space.random_vector(rng)
        a = float(alphas[k])
        lhs = space.nu(p)
        rhs = TAU_M(space.nu(space.scale(a, p)), space.nu(space.scale(1.0 - a, p)))
        if not df_equiv(lhs, rhs, atol):
            failures.append({"p": p, "alpha": a, "nu_p": lhs, "tau_M": rhs})
    return VerificationReport(
        check="serstnev",
        passed=not failures,
        samples=len(alphas),
        seed=seed,
        witness=failures[0] if failures else None,
        details={"failures": len(failures)},
    )


def in_strong_neighborhood(space, p, t: float, q) -> bool:
    """q in N_p(t), i.e. nu_{q-p}(t) > 1 - t."""
    if not t > 0:
        raise ValueError("neighbourhood radius must be positive")
    return space.nu(space.sub(q, p))(t) > 1.0 - t


def _as_map(linear) -> Callable[[np.ndarray], np.ndarray]:
    if callable(linear):
        return linear
    A = np.asarray(linear, dtype=float)
    return lambda p: A @ p


def check_strongly_bounded(linear, k: float, source, target, samples: int = 200, seed: int = 0,
                           atol: float = ROUNDOFF) -> VerificationReport:
    """nu'_{Tp}(x) >= nu_p(x / k) for sampled p, compared at every breakpoint."""
    if not k > 0:
        raise ValueError("k must be positive")
    T = _as_map(linear)
    rng = np.random.default_rng(seed)
    worst = WorstCase()
    points = [source.zero()] + [source.random_vector(rng) for _ in range(samples)]
    for p in points:
        lhs = target.nu(T(p))
        rhs = scaled(source.nu(p), k)
        worst.update(df_margin(rhs, lhs, atol), lambda: {"p": p, "nu_Tp": lhs, "nu_p(x/k)": rhs})
    return VerificationReport(
        check="strongly_bounded",
        passed=worst.margin >= 0,
        samples=len(points),
        seed=seed,
        margin=worst.value,
        witness=worst.witness if worst.margin < 0 else None,
        details={"k": k},
    )


def check_lemma_alpha(space, samples: int = 200, seed: int = 0, atol: float = ROUNDOFF) -> VerificationReport:
    """|alpha| <= |beta| implies nu_{beta p} <= nu_{alpha p}."""
    rng = np.random.default_rng(seed)
    worst = WorstCase()
    for k in range(samples):
        p = space.random_vector(rng)
        a, b = rng.uniform(-3.0, 3.0, 2)
        if k % 7 == 0:
            a = 0.0
        elif k % 7 == 1:
            a = b
        if abs(a) > abs(b):
            a, b = b, a
        big, small = space.nu(space.scale(b, p)), space.nu(space.scale(a, p))
        worst.update(df_margin(big, small, atol), lambda: {"p": p, "alpha": a, "beta": b})
    return VerificationReport(
        check="lemma_alpha",
        passed=worst.margin >= 0,
        samples=samples,
        seed=seed,
        margin=worst.value,
        witness=worst.witness if worst.margin < 0 else None,
    )
