"""Subspaces, cosets and the quotient probabilistic norm.

The quotient norm is sup_{w in W} nu_{p+w}.  Two strategies compute it:

* ``exact``: every implemented rule is radial and antitone in the classical
  norm, so the sup is the profile evaluated at dist(p, W);
* ``sampled``: a genuine pointwise sup over a finite family of coset members
  (a coefficient grid on expanding radii for spans, a spreading family for
  the c00 sum kernel).
"""

from __future__ import annotations

import dataclasses
import itertools
import math
from dataclasses import dataclass, field

import numpy as np

from .distfn import EPS0, DistFn, df_margin, df_pointwise_sup, sibley, sibley_to_eps0, sup_from_jumps
from .pnspace import ROUNDOFF, PNSpace, VectorOps, classical_norm, pad
from .report import Inconclusive, VerificationReport, WorstCase

MEMBER_RTOL = 1e-10
MAX_GRID_POINTS = 6_000_000


@dataclass(eq=False)
class Subspace:
    """A linear subspace: the span of a basis, or the kernel of the c00 coordinate sum."""

    kind: str  # "span" or "c00-sum-kernel"
    basis: np.ndarray | None = None  # rows are basis vectors

    def __post_init__(self):
        if self.kind == "span":
            B = np.atleast_2d(np.asarray(self.basis, dtype=float))
            if B.size == 0:
                B = B.reshape(0, B.shape[-1] if B.ndim == 2 else 0)
            elif np.linalg.matrix_rank(B) < B.shape[0]:
                raise ValueError("basis vectors are linearly dependent")
            self.basis = B
        elif self.kind != "c00-sum-kernel":
            raise ValueError(f"unknown subspace kind {self.kind!r}")

    @property
    def dim(self) -> int | None:
        return self.basis.shape[0] if self.kind == "span" else None

    def _basis_for(self, n: int) -> np.ndarray:
        B = self.basis
        if B.shape[1] < n:
            B = np.pad(B, ((0, 0), (0, n - B.shape[1])))
        return B

    def contains(self, v) -> bool:
        v = np.atleast_1d(np.asarray(v, dtype=float))
        scale = max(1.0, float(np.max(np.abs(v)))) if v.size else 1.0
        if self.kind == "c00-sum-kernel":
            return abs(math.fsum(v)) <= MEMBER_RTOL * scale * max(1, len(v))
        if self.basis.shape[0] == 0:
            return not np.any(v)
        B = self._basis_for(len(v))
        if B.shape[1] > len(v):
            v = np.pad(v, (0, B.shape[1] - len(v)))
        c, *_ = np.linalg.lstsq(B.T, v, rcond=None)
        return float(np.max(np.abs(B.T @ c - v))) <= MEMBER_RTOL * scale

    @property
    def orthonormal(self) -> np.ndarray:
        """Orthonormal rows spanning the same subspace; sampling radii are then ambient lengths."""
        q, _ = np.linalg.qr(self.basis.T)
        return q.T

    def random_member(self, rng: np.random.Generator, scale: float = 2.0) -> np.ndarray:
        if self.kind == "c00-sum-kernel":
            n = int(rng.integers(2, 9))
            v = rng.uniform(-scale, scale, n)
            return v - v.sum() / n
        c = rng.uniform(-scale, scale, self.basis.shape[0])
        return c @ self.basis


def span(*vectors) -> Subspace:
    return Subspace("span", np.array(vectors, dtype=float))


def c00_sum_kernel() -> Subspace:
    return Subspace("c00-sum-kernel")


def coset_equal(p, q, W: Subspace) -> bool:
    """p ~_W q, i.e. p - q in W."""
    p = np.atleast_1d(np.asarray(p, dtype=float))
    q = np.atleast_1d(np.asarray(q, dtype=float))
    if W.kind == "span":
        d = W.basis.shape[1]
        if len(p) != len(q) or (len(p) != d and W.basis.shape[0]):
            raise ValueError(f"dimension mismatch: {len(p)}, {len(q)} vs ambient {d}")
    else:
        p, q = pad(p, q)
    return W.contains(p - q)


def _solve(A: np.ndarray, b: np.ndarray):
    try:
        x = np.linalg.solve(A, b)
    except np.linalg.LinAlgError:
        return None
    return x if np.all(np.isfinite(x)) else None


def nearest(p, W: Subspace, norm_kind: str) -> tuple[float, np.ndarray]:
    """(dist(p, W), r) where r is a minimal-norm representative of p + W.

    l2 uses the orthogonal projection.  For l1 and linf the objective is a
    convex piecewise-linear function of the basis coefficients whose minimum
    sits at a vertex of its linearity regions, so the vertices are
    enumerated: k vanishing residuals for l1, k+1 residuals of equal
    magnitude for linf.
    """
    if W.kind != "span":
        raise ValueError("distance to a predicate-only subspace is not available; use the sampled quotient norm")
    p = np.atleast_1d(np.asarray(p, dtype=float))
    B = W.basis
    k = B.shape[0]
    if k == 0:
        return classical_norm(p, norm_kind), p.copy()
    if B.shape[1] != len(p):
        raise ValueError(f"dimension mismatch: vector of length {len(p)} vs ambient {B.shape[1]}")
    A = B.T  # residual r = p - A c
    d = len(p)
    if norm_kind == "l2":
        c, *_ = np.linalg.lstsq(A, p, rcond=None)
        candidates = [c]
    elif norm_kind == "l1":
        candidates = []
        for rows in itertools.combinations(range(d), k):
            c = _solve(A[list(rows)], p[list(rows)])
            if c is not None:
                candidates.append(c)
    elif norm_kind == "linf":
        candidates = []
        for rows in itertools.combinations(range(d), min(k + 1, d)):
            rows = list(rows)
            if len(rows) < k + 1:
                break
            for signs in itertools.product((1.0, -1.0), repeat=k):
                s = np.array((1.0,) + signs)
                M = np.hstack([A[rows], s[:, None]])
                sol = _solve(M, p[rows])
                if sol is not None:
                    candidates.append(sol[:k])
        if not candidates:  # k == d: W is everything
            c, *_ = np.linalg.lstsq(A, p, rcond=None)
            candidates = [c]
    else:
        raise ValueError(f"unknown norm {norm_kind!r}")
    best = None
    for c in candidates:
        r = p - A @ c
        n = classical_norm(r, norm_kind)
        if best is None or n < best[0]:
            best = (n, r)
    return best


def dist_to_subspace(p, W: Subspace, norm_kind: str) -> float:
    return nearest(p, W, norm_kind)[0]


@dataclass(eq=False)
class QuotientSpace(VectorOps):
    """V / ~_W with the sup-based quotient norm."""

    ambient: PNSpace
    W: Subspace
    strategy: str = "auto"
    radii: tuple[float, ...] = (1.0, 2.0, 4.0, 8.0)
    grid_step: float = 1e-2
    schedule_tol: float = 1e-3
    horizon: int = 100

    def __post_init__(self):
        if self.ambient.c00 != (self.W.kind == "c00-sum-kernel"):
            raise ValueError("c00 quotients use the sum kernel; finite-dimensional ones use a span")
        if self.strategy == "auto":
            self.strategy = "exact" if self.W.kind == "span" else "sampled"
        if self.strategy not in ("exact", "sampled"):
            raise ValueError(f"unknown quotient-norm strategy {self.strategy!r}")
        if self.strategy == "exact" and not self.exact_available:
            raise ValueError("no exact quotient norm for this subspace")
        if not (self.grid_step > 0 and self.schedule_tol > 0 and self.horizon >= 1):
            raise ValueError("grid step, schedule tolerance and horizon must be positive")

    @property
    def exact_available(self) -> bool:
        return True  # spans by vertex enumeration, the c00 sum kernel in closed form

    @property
    def c00(self) -> bool:
        return self.ambient.c00

    @property
    def tau(self):
        return self.ambient.tau

    @property
    def tau_star(self):
        return self.ambient.tau_star

    def coerce(self, p):
        return self.ambient.coerce(p)

    def zero(self):
        return self.ambient.zero()

    def is_zero(self, p) -> bool:
        return self.W.contains(p)

    def random_vector(self, rng, scale: float = 2.0):
        return self.ambient.random_vector(rng, scale)

    def nu(self, p) -> DistFn:
        return quotient_norm(self, p)

    def canonical(self, p) -> np.ndarray:
        """Minimal-l2 representative of p + W."""
        return nearest(self.coerce(p), self.W, "l2")[1]

    def handle(self, p) -> "CosetHandle":
        return CosetHandle(self.coerce(p), self)

    def representatives(self, p):
        """Coset members p + w, best first where that ordering is known."""
        p = self.coerce(p)
        if self.strategy == "exact" and self.W.kind == "span":
            yield nearest(p, self.W, self.ambient.norm_kind)[1]
            return
        if self.W.kind == "c00-sum-kernel":
            if self.strategy == "exact" and self.ambient.norm_kind == "l1":
                yield np.array([math.fsum(p)])  # attains |sum p|
                return
            s = math.fsum(p)
            yield p
            for m in range(1, self.horizon + 2):
                yield np.full(m, s / m)
            return
        for R in self.radii:
            P = p + _coefficient_grid(self.W.dim, R, self.grid_step) @ self.W.orthonormal
            order = np.argsort(self.ambient.norms(P), kind="stable")
            yield from P[order[:64]]


@dataclass(eq=False)
class CosetHandle:
    rep: np.ndarray
    Q: QuotientSpace

    def __eq__(self, other):
        if not isinstance(other, CosetHandle):
            return NotImplemented
        return coset_equal(self.rep, other.rep, self.Q.W)

    __hash__ = None

    def canonical(self) -> np.ndarray:
        return self.Q.canonical(self.rep)


def _coefficient_grid(k: int, R: float, step: float) -> np.ndarray:
    m = int(round(R / step))
    axis = np.arange(-m, m + 1) * step
    if (2 * m + 1) ** k > MAX_GRID_POINTS:
        raise ValueError(f"sampling grid for a {k}-dimensional subspace at radius {R} is too large")
    mesh = np.meshgrid(*([axis] * k), indexing="ij")
    return np.stack([g.ravel() for g in mesh], axis=1)


def quotient_norm(Q: QuotientSpace, p) -> DistFn:
    """nu-bar_{p+W}(x) = sup_{q in W} nu_{p+q}(x)."""
    p = Q.coerce(p)
    space = Q.ambient
    if Q.W.contains(p):
        return EPS0  # q = -p attains nu_theta = eps0
    if Q.strategy == "exact":
        return space.profile(_exact_dist(p, Q.W, space.norm_kind))
    if Q.W.kind == "c00-sum-kernel":
        s = math.fsum(p)
        norms = [space.norm(p)] + [classical_norm(np.full(m, s / m), space.norm_kind) for m in range(1, Q.horizon + 2)]
        return sup_from_jumps(*space.profile_jumps(np.array(norms)))
    prev = None
    for R in Q.radii:
        P = p + _coefficient_grid(Q.W.dim, R, Q.grid_step) @ Q.W.orthonormal
        cur = sup_from_jumps(*space.profile_jumps(space.norms(P)))
        if prev is not None and sibley(cur, prev) < Q.schedule_tol:
            return cur
        prev = cur
    raise Inconclusive(f"quotient-norm schedule did not settle by radius {Q.radii[-1]}", best=prev, stage="quotient_norm")


def _exact_dist(p, W: Subspace, norm_kind: str) -> float:
    if W.kind == "span":
        return dist_to_subspace(p, W, norm_kind)
    # |sum p| <= ||p||_1 makes the kernel l1-closed at distance |sum p|; under l2 and
    # linf the spread vectors (s/m) 1_m have norm -> 0, so the kernel is dense.
    return abs(math.fsum(p)) if norm_kind == "l1" else 0.0


def closedness_probe(Q: QuotientSpace, probes) -> VerificationReport:
    """Look for N1 failures of the quotient: p not in W with nu-bar_{p+W} close to eps0.

    Under the exact strategy the estimate is the true distance, so N1 fails
    only when it is 0.  A sampled estimate is flagged when it is below
    1/horizon and still shrinks when the horizon doubles, which separates a
    dense W from a probe that merely lies close to a closed one.  Flagged
    probes are evidence that W is not strongly closed and the quotient is
    only a PPN space; passing probes never prove closedness.
    """
    threshold = 1.0 / Q.horizon
    doubled = None if Q.strategy == "exact" else dataclasses.replace(Q, horizon=2 * Q.horizon)
    findings = []
    worst = WorstCase()
    for k, p in enumerate(probes):
        p = Q.coerce(p)
        if Q.W.contains(p):
            raise ValueError(f"probe {k} lies in W")
        est = sibley_to_eps0(quotient_norm(Q, p))
        item = {"probe": p, "dS_estimate": est}
        if doubled is None:
            fails = est == 0.0
            margin = est
            dist = _exact_dist(p, Q.W, Q.ambient.norm_kind)
            item["dist"] = dist
            item["lower_bound"] = min(dist, 1.0)
        else:
            est2 = sibley_to_eps0(quotient_norm(doubled, p))
            shrinking = est2 < est
            fails = est < threshold and shrinking
            margin = est - threshold if shrinking else est
            item["dS_estimate_2h"] = est2
        item["finding"] = "N1 fails" if fails else "N1 holds"
        findings.append(item)
        worst.update(margin, lambda: item)
    failed = [f for f in findings if f["finding"] == "N1 fails"]
    return VerificationReport(
        check="closedness_probe",
        passed=not failed,
        samples=len(findings),
        margin=worst.value,
        witness=failed[0] if failed else None,
        details={
            "horizon": Q.horizon,
            "threshold": threshold,
            "strategy": Q.strategy,
            "findings": findings,
            "verdict": "N1 fails: W is not strongly closed, the quotient is PPN only" if failed
            else "no N1 failure found up to the horizon",
        },
    )


def kernel_C(space, candidates, alphas=(-2.5, -1.0, 0.5, 3.0)) -> list[np.ndarray]:
    """Candidates with nu_p = eps0, checked to be closed under sums and scalings."""
    C = [space.coerce(p) for p in candidates if space.nu(p) == EPS0]
    for i, p in enumerate(C):
        for a in alphas:
            if space.nu(space.scale(a, p)) != EPS0:
                raise AssertionError(f"kernel not closed under scaling: {a} * {p}")
        for q in C[i:]:
            if space.nu(space.add(p, q)) != EPS0:
                raise AssertionError(f"kernel not closed under addition: {p} + {q}")
    return C


def remark_coincidence_check(space, C, samples: int = 50, seed: int = 0, atol: float = ROUNDOFF) -> VerificationReport:
    """nu-bar_{p+C} >= nu_p >= nu_{p+r} for sampled p and every r in C.

    The quotient by C is evaluated as the pointwise sup over the supplied
    members of C, so equality of all three is the expected outcome.
    """
    if not C:
        raise ValueError("C must contain at least theta")
    rng = np.random.default_rng(seed)
    worst = WorstCase()
    for _ in range(samples):
        p = space.random_vector(rng)
        nu_p = space.nu(p)
        shifted = [space.nu(space.add(p, r)) for r in C]
        bar = df_pointwise_sup(shifted + [nu_p])
        worst.update(df_margin(nu_p, bar, atol), lambda: {"p": p, "step": "nu-bar >= nu_p"})
        for r, nu_pr in zip(C, shifted):
            worst.update(df_margin(nu_pr, nu_p, atol), lambda: {"p": p, "r": r, "step": "nu_p >= nu_p+r"})
    return VerificationReport(
        check="remark_coincidence",
        passed=worst.margin >= 0,
        samples=samples,
        seed=seed,
        margin=worst.value,
        witness=worst.witness if worst.margin < 0 else None,
        details={"kernel_size": len(C)},
    )


def projection_check(Q: QuotientSpace, samples: int = 200, seed: int = 0, atol: float = ROUNDOFF) -> VerificationReport:
    """The canonical projection is strongly bounded (k = 1) and maps N_p(t) onto N'_{p_W}(t)."""
    if Q.strategy != "exact" or Q.W.kind != "span":
        raise ValueError("projection_check needs the exact quotient norm of a spanned subspace")
    space = Q.ambient
    rng = np.random.default_rng(seed)
    worst = WorstCase()
    counts = {"forward": 0, "backward": 0, "outside": 0}
    for _ in range(samples):
        p = space.random_vector(rng)
        worst.update(df_margin(space.nu(p), Q.nu(p), atol), lambda: {"p": p, "check": "nu-bar >= nu_p"})
        t = float(rng.uniform(0.01, 1.2))
        q = space.add(p, space.random_vector(rng, scale=float(rng.choice([0.05, 0.5, 3.0]))))
        diff = space.sub(q, p)
        in_ambient = space.nu(diff)(t) > 1.0 - t
        in_quotient = Q.nu(diff)(t) > 1.0 - t
        if in_ambient:
            counts["forward"] += 1
            if not in_quotient:
                worst.update(-1.0, lambda: {"p": p, "q": q, "t": t, "check": "q in N_p(t) but pi q not in N'(t)"})
        if in_quotient:
            counts["backward"] += 1
            rep = space.add(p, Q.representatives(diff).__next__())
            if not (coset_equal(rep, q, Q.W) and space.nu(space.sub(rep, p))(t) > 1.0 - t):
                worst.update(-1.0, lambda: {"p": p, "q": q, "t": t, "rep": rep,
                                            "check": "no representative of pi q inside N_p(t)"})
        else:
            counts["outside"] += 1
    return VerificationReport(
        check="projection",
        passed=worst.margin >= 0,
        samples=samples,
        seed=seed,
        margin=worst.value,
        witness=worst.witness if worst.margin < 0 else None,
        details=counts,
    )


@dataclass(eq=False)
class RestrictedSpace(VectorOps):
    """(W, nu', tau, tau*): the ambient norm restricted to a subspace."""

    ambient: PNSpace
    W: Subspace

    @property
    def c00(self):
        return self.ambient.c00

    @property
    def tau(self):
        return self.ambient.tau

    @property
    def tau_star(self):
        return self.ambient.tau_star

    def coerce(self, p):
        return self.ambient.coerce(p)

    def zero(self):
        return self.ambient.zero()

    def is_zero(self, p):
        return self.ambient.is_zero(p)

    def nu(self, p):
        return self.ambient.nu(p)

    def random_vector(self, rng, scale: float = 2.0):
        return self.W.random_member(rng, scale)


def restrict(space: PNSpace, W: Subspace) -> RestrictedSpace:
    return RestrictedSpace(space, W)
