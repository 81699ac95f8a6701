"""Step distribution functions in Delta+ and the Sibley metric.

A :class:`DistFn` is stored as a list of jump locations ``xs`` and the plateau
values ``vs`` that hold to the right of each jump::

    F(x) = 0       for x <= xs[0]
    F(x) = vs[i]   for xs[i] < x <= xs[i+1]
    F(x) = vs[-1]  for x > xs[-1]   (finite x)
    F(+inf) = 1

Left-continuity is therefore built into the encoding.  ``vs[-1]`` is the left
limit at +inf; when it is below 1 the remaining mass sits at infinity.
"""

from __future__ import annotations

import bisect
import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .report import VerificationReport

INF = math.inf


@dataclass(frozen=True)
class DistFn:
    xs: tuple[float, ...] = ()
    vs: tuple[float, ...] = ()

    def __post_init__(self):
        xs = tuple(float(x) for x in self.xs)
        vs = tuple(float(v) for v in self.vs)
        if len(xs) != len(vs):
            raise ValueError(f"{len(xs)} breakpoints but {len(vs)} plateau values")
        for i, x in enumerate(xs):
            if not math.isfinite(x):
                raise ValueError(f"breakpoint {i} is not finite: {x}")
            if i and x <= xs[i - 1]:
                raise ValueError("breakpoints must be strictly increasing")
        if xs and xs[0] < 0:
            raise ValueError(f"first breakpoint {xs[0]} < 0: F(x) must vanish for x <= 0")
        prev = 0.0
        for v in vs:
            if not 0.0 <= v <= 1.0:
                raise ValueError(f"plateau value {v} outside [0, 1]")
            if v < prev:
                raise ValueError("plateau values must be nondecreasing")
            prev = v
        # canonical form: drop breakpoints that do not change the value
        keep_x, keep_v, prev = [], [], 0.0
        for x, v in zip(xs, vs):
            if v != prev:
                keep_x.append(x)
                keep_v.append(v)
                prev = v
        object.__setattr__(self, "xs", tuple(keep_x))
        object.__setattr__(self, "vs", tuple(keep_v))

    def __call__(self, x):
        if np.ndim(x) == 0:
            return evaluate(self, float(x))
        x = np.asarray(x, dtype=float)
        table = np.concatenate(([0.0], self.vs))
        out = table[np.searchsorted(np.asarray(self.xs), x, side="left")]
        out = np.where(x == INF, 1.0, out)
        return out

    @property
    def left_limit_at_infinity(self) -> float:
        return self.vs[-1] if self.vs else 0.0

    @property
    def in_d_plus(self) -> bool:
        return self.left_limit_at_infinity == 1.0

    @property
    def is_eps0(self) -> bool:
        return self.xs == (0.0,) and self.vs == (1.0,)

    @property
    def is_eps_inf(self) -> bool:
        return not self.xs

    def saturation_point(self) -> float:
        """Smallest a with F = 1 on (a, +inf); +inf if F never reaches 1."""
        return self.xs[-1] if self.in_d_plus else INF

    def __repr__(self):
        if not self.xs:
            return "DistFn(eps_inf)"
        if self.vs == (1.0,):
            return f"DistFn(eps_{self.xs[0]!r})"
        steps = ", ".join(f"{x!r}:{v!r}" for x, v in zip(self.xs, self.vs))
        return f"DistFn({steps})"


def from_steps(xs: Iterable[float], vs: Iterable[float]) -> DistFn:
    return DistFn(tuple(xs), tuple(vs))


def unit_step(a: float) -> DistFn:
    """The unit step eps_a: 0 on (-inf, a], 1 on (a, +inf]."""
    a = float(a)
    if a == INF:
        return DistFn()
    if not a >= 0.0:
        raise ValueError(f"unit_step({a}) lies outside Delta+ (needs a >= 0)")
    return DistFn((a,), (1.0,))


EPS0 = unit_step(0.0)
EPS_INF = DistFn()


def evaluate(F: DistFn, x: float) -> float:
    """Left-continuous value F(x) on the extended reals."""
    if x == INF:
        return 1.0
    i = bisect.bisect_left(F.xs, x)
    return F.vs[i - 1] if i else 0.0


def right_limit(F: DistFn, x: float) -> float:
    """lim F(t) as t decreases to x."""
    if x == INF:
        return 1.0
    i = bisect.bisect_right(F.xs, x)
    return F.vs[i - 1] if i else 0.0


def scaled(F: DistFn, c: float) -> DistFn:
    """x -> F(x / c) for c > 0: every breakpoint is multiplied by c."""
    if not c > 0:
        raise ValueError("scale factor must be positive")
    return DistFn(tuple(x * c for x in F.xs), F.vs)


def shifted(F: DistFn, a: float) -> DistFn:
    """x -> F(x - a) for a >= 0 (equivalently tau_M(F, eps_a))."""
    return DistFn(tuple(x + a for x in F.xs), F.vs)


def sup_gap(A: DistFn, B: DistFn, h: float = 0.0, lo: float = -INF, hi: float = INF) -> float:
    """sup of A(x) - B(x + h) over x in the open interval (lo, hi).

    Both terms are left-continuous step functions of x, so their difference
    is constant on the pieces cut out by A's breakpoints and by B's
    breakpoints shifted by -h.  Plateau values at each cut come straight from
    the owning function so that the shift never pushes a cut to the wrong
    side of its own jump.
    """
    cuts: dict[float, list] = {}
    for x, v in zip(A.xs, A.vs):
        cuts.setdefault(x, [None, None])[0] = v
    for x, v in zip(B.xs, B.vs):
        cuts.setdefault(x - h, [None, None])[1] = v
    best = -INF
    prev = -INF
    value = 0.0  # both functions vanish near -inf
    for pos in sorted(cuts):
        if prev < hi and pos > lo:
            best = max(best, value)
        a_right, b_right = cuts[pos]
        if a_right is None:
            a_right = right_limit(A, pos)
        if b_right is None:
            b_right = right_limit(B, pos + h)
        value = a_right - b_right
        prev = pos
    if prev < hi:
        best = max(best, value)
    return best


def df_margin(F: DistFn, G: DistFn, atol: float = 0.0) -> float:
    """min over x of G(x + atol) - F(x); nonnegative iff F <= G up to an abscissa slack."""
    return -sup_gap(F, G, atol)


def df_leq(F: DistFn, G: DistFn, atol: float = 0.0) -> bool:
    """F <= G pointwise.  With atol > 0, G may be read atol to the right."""
    return df_margin(F, G, atol) >= 0.0


def df_equiv(F: DistFn, G: DistFn, atol: float) -> bool:
    """Equality up to an abscissa tolerance (for float round-off in norms)."""
    return F == G or (df_leq(F, G, atol) and df_leq(G, F, atol))


def df_pointwise_sup(family: Sequence[DistFn]) -> DistFn:
    """Pointwise supremum of a finite nonempty family."""
    if not family:
        raise ValueError("pointwise sup of an empty family")
    if len(family) == 1:
        return family[0]
    xs = np.concatenate([np.asarray(F.xs, dtype=float) for F in family])
    vs = np.concatenate([np.asarray(F.vs, dtype=float) for F in family])
    return sup_from_jumps(xs, vs)


def sup_from_jumps(xs: np.ndarray, vs: np.ndarray) -> DistFn:
    """Pointwise sup of a family given as pooled (breakpoint, right value) pairs.

    A nondecreasing step function equals the max of its right values over
    breakpoints strictly to the left of x, so the sup of a family is a running
    max over the pooled pairs sorted by breakpoint.
    """
    if len(xs) == 0:
        return EPS_INF
    order = np.lexsort((vs, xs))
    xs, vs = xs[order], np.maximum.accumulate(vs[order])
    last = np.ones(len(xs), dtype=bool)
    last[:-1] = xs[1:] != xs[:-1]
    return DistFn(tuple(xs[last].tolist()), tuple(vs[last].tolist()))


def _condition_holds(F: DistFn, G: DistFn, h: float) -> bool:
    """(F, G; h): F(x-h) - h <= G(x) <= F(x+h) + h for all x in (-1/h, 1/h)."""
    lo, hi = -1.0 / h, 1.0 / h
    if sup_gap(G, F, h, lo, hi) > h:
        return False
    # F(x - h) - G(x) with y = x - h ranging over (lo - h, hi - h)
    return sup_gap(F, G, h, lo - h, hi - h) <= h


def sibley_condition(F: DistFn, G: DistFn, h: float) -> bool:
    """Both (F, G; h) and (G, F; h)."""
    return _condition_holds(F, G, h) and _condition_holds(G, F, h)


def sibley(F: DistFn, G: DistFn, tol: float = 1e-9) -> float:
    """Modified Levy (Sibley) distance, by bisection on h in (0, 1].

    The two-sided condition is monotone in h and always holds at h = 1, so
    the returned upper bracket is within tol above the infimum.
    """
    if not tol > 0:
        raise ValueError("tol must be positive")
    if F == G:
        return 0.0
    lo, hi = 0.0, 1.0
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if sibley_condition(F, G, mid):
            hi = mid
        else:
            lo = mid
    for c in _critical_h(F, G, lo, hi):
        if sibley_condition(F, G, c):
            return c
    return hi


def _critical_h(F: DistFn, G: DistFn, lo: float, hi: float) -> list[float]:
    """Candidate values of h at which the band condition can switch, restricted to (lo, hi].

    Switches happen when a shifted breakpoint meets a breakpoint, a value gap
    equals h, or a breakpoint shifted by h reaches the window edge 1/h.
    The condition is monotone, so the least candidate that passes lies
    within the bisection bracket of the infimum.
    """
    xs = np.concatenate([F.xs, G.xs, [0.0]])
    vs = np.concatenate([F.vs, G.vs, [0.0, 1.0]])
    cands = [np.abs(xs[:, None] - xs[None, :]).ravel(), np.abs(vs[:, None] - vs[None, :]).ravel()]
    for y in xs:
        for s in (1.0, -1.0):  # h^2 + s*y*h - 1 = 0
            cands.append(np.array([(-s * y + math.sqrt(y * y + 4.0)) / 2.0]))
    c = np.unique(np.concatenate(cands))
    return [float(h) for h in c if lo < h <= hi]


def sibley_to_eps0(F: DistFn) -> float:
    """d_S(F, eps0) = inf{h > 0 : F(h+) > 1 - h}, read off the plateaus.

    On a plateau [a, b) of right-limit value v the admissible h are those
    with h > 1 - v; the first plateau admitting any h yields the infimum.
    """
    starts = (0.0,) + F.xs
    values = (0.0,) + F.vs
    for k, (a, v) in enumerate(zip(starts, values)):
        if k + 1 < len(starts) and starts[k + 1] == a:
            continue
        b = starts[k + 1] if k + 1 < len(starts) else INF
        h = max(a, 1.0 - v)
        if h < b:
            return min(h, 1.0)
    return 1.0


def weak_convergence_check(seq: Sequence[DistFn], F: DistFn, tol: float = 1e-2) -> VerificationReport:
    """Compare d_S(F_n, F) -> 0 against pointwise convergence at continuity points.

    Pointwise values are compared at points of (0, 1/tol) lying more than tol
    away from every jump of F; there d_S(F_n, F) < tol forces
    |F_n(x) - F(x)| <= tol.  Disagreement between the two criteria fails the
    report; whether the sequence converges is recorded in ``details``.
    """
    if not seq:
        raise ValueError("empty sequence")
    dists = [sibley_to_eps0(Fn) if F.is_eps0 else sibley(Fn, F) for Fn in seq]
    grid = np.linspace(0.0, 1.0 / tol, 2001)[1:-1]
    if F.xs:
        jumps = np.asarray(F.xs)
        grid = grid[np.min(np.abs(grid[:, None] - jumps[None, :]), axis=1) > tol]
    target = F(grid)
    pointwise = [float(np.max(np.abs(Fn(grid) - target))) if len(grid) else 0.0 for Fn in seq]

    def tail_start(ok):
        n = len(ok)
        while n > 0 and ok[n - 1]:
            n -= 1
        return n + 1 if n < len(ok) else None

    ds_from = tail_start([d < tol for d in dists])
    pw_from = tail_start([e <= tol for e in pointwise])
    ds_conv, pw_conv = ds_from is not None, pw_from is not None
    agree = ds_conv == pw_conv
    return VerificationReport(
        check="weak_convergence",
        passed=agree,
        samples=len(seq),
        margin=tol - dists[-1],
        witness=None if agree else {"final_dS": dists[-1], "final_pointwise_gap": pointwise[-1]},
        details={
            "converges": ds_conv and pw_conv,
            "final_dS": dists[-1],
            "dS_below_tol_from": ds_from,
            "pointwise_within_tol_from": pw_from,
            "tol": tol,
        },
    )


class DFFormatError(ValueError):
    pass


def parse_df(text: str, source: str = "<string>") -> DistFn:
    """Parse the ``DF v1`` text format.

    After the header each line ``x v`` sets the value v on (x, next x]; the
    final line ``inf v`` gives F(+inf), which must be 1 for a member of Delta+.
    """
    lines = text.splitlines()
    if not lines or lines[0].strip() != "DF v1":
        raise DFFormatError(f"{source}:1: expected header 'DF v1'")
    xs, vs = [], []
    at_inf = None
    for lineno, raw in enumerate(lines[1:], start=2):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if at_inf is not None:
            raise DFFormatError(f"{source}:{lineno}: content after the 'inf' line")
        parts = line.split()
        if len(parts) != 2:
            raise DFFormatError(f"{source}:{lineno}: expected 'x v', got {raw!r}")
        try:
            v = float(parts[1])
        except ValueError:
            raise DFFormatError(f"{source}:{lineno}: value {parts[1]!r} is not a number") from None
        if not 0.0 <= v <= 1.0:
            raise DFFormatError(f"{source}:{lineno}: value {v} outside [0, 1]")
        if parts[0].lower() in ("inf", "+inf"):
            if v != 1.0:
                raise DFFormatError(f"{source}:{lineno}: F(+inf) must be 1, got {v}")
            at_inf = v
            continue
        try:
            x = float(parts[0])
        except ValueError:
            raise DFFormatError(f"{source}:{lineno}: abscissa {parts[0]!r} is not a number") from None
        if not math.isfinite(x):
            raise DFFormatError(f"{source}:{lineno}: abscissa must be finite or the word 'inf'")
        if x < 0:
            raise DFFormatError(f"{source}:{lineno}: abscissa {x} < 0 (F must vanish on x <= 0)")
        if xs and x <= xs[-1]:
            raise DFFormatError(f"{source}:{lineno}: abscissas must be strictly ascending")
        if vs and v < vs[-1]:
            raise DFFormatError(f"{source}:{lineno}: values must be nondecreasing")
        xs.append(x)
        vs.append(v)
    if at_inf is None:
        raise DFFormatError(f"{source}:{len(lines)}: missing final 'inf 1' line")
    return DistFn(tuple(xs), tuple(vs))


def read_df(path) -> DistFn:
    with open(path) as fh:
        return parse_df(fh.read(), str(path))


def format_df(F: DistFn) -> str:
    lines = ["DF v1"]
    lines += [f"{x!r} {v!r}" for x, v in zip(F.xs, F.vs)]
    lines.append("inf 1")
    return "\n".join(lines) + "\n"


def write_df(F: DistFn, path) -> None:
    with open(path, "w") as fh:
        fh.write(format_df(F))


def random_distfn(rng: np.random.Generator, max_steps: int = 5, span: float = 3.0,
                  d_plus: float = 0.7, lattice: float | None = None) -> DistFn:
    """A random step d.f.; with probability d_plus it reaches 1 at a finite point."""
    k = int(rng.integers(1, max_steps + 1))
    if lattice:
        xs = np.unique(rng.integers(0, int(span / lattice) + 1, k)) * lattice
    else:
        xs = np.unique(rng.uniform(0.0, span, k))
    vs = np.sort(rng.uniform(0.0, 1.0, len(xs)))
    if rng.random() < d_plus:
        vs[-1] = 1.0
    return DistFn(tuple(xs.tolist()), tuple(vs.tolist()))
