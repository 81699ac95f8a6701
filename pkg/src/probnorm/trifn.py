"""t-norms, t-conorms and the triangle functions tau_T, tau_T* on step d.f.'s.

Both convolutions are computed exactly.  For step functions the sup in
``tau_T(F, G)(x) = sup{T(F(u), G(v)) : u + v = x}`` is taken over plateau
pairs: plateau i of F (starting at f_i) and plateau j of G (starting at g_j)
can be combined exactly when x > f_i + g_j, so the result is a running max of
T over breakpoint sums.  The inf-convolution is the mirror image, driven by
plateau right ends and a suffix min.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .distfn import DistFn, df_leq, df_margin, df_pointwise_sup, unit_step
from .report import VerificationReport, WorstCase


def _check_unit(a: float, b: float) -> None:
    if not (0.0 <= a <= 1.0 and 0.0 <= b <= 1.0):
        raise ValueError(f"t-norm arguments must lie in [0, 1], got ({a}, {b})")


def _tnorm_boundaries(fn):
    """Enforce T(a, 1) = a and T(a, 0) = 0 exactly, whatever fn rounds to."""

    def wrapped(a, b):
        if b == 1.0:
            return a
        if a == 1.0:
            return b
        if a == 0.0 or b == 0.0:
            return 0.0
        return fn(a, b)

    return wrapped


def _conorm_boundaries(fn):
    """Enforce S(a, 0) = a and S(a, 1) = 1 exactly."""

    def wrapped(a, b):
        if b == 0.0:
            return a
        if a == 0.0:
            return b
        if a == 1.0 or b == 1.0:
            return 1.0
        return fn(a, b)

    return wrapped


@dataclass(frozen=True)
class TNorm:
    """A t-norm; ``co`` optionally supplies a closed form of its t-conorm."""

    name: str
    fn: Callable[[float, float], float] = field(compare=False, repr=False)
    co: Callable[[float, float], float] | None = field(default=None, compare=False, repr=False)

    def __post_init__(self):
        object.__setattr__(self, "fn", _tnorm_boundaries(self.fn))
        if self.co is not None:
            object.__setattr__(self, "co", _conorm_boundaries(self.co))

    def __call__(self, a: float, b: float) -> float:
        _check_unit(a, b)
        return float(self.fn(a, b))


MIN = TNorm("min", min, max)
PRODUCT = TNorm("product", lambda a, b: a * b, lambda a, b: a + b - a * b)
LUKASIEWICZ = TNorm("lukasiewicz", lambda a, b: max(a + b - 1.0, 0.0), lambda a, b: min(a + b, 1.0))
BUILTIN_TNORMS = {"min": MIN, "M": MIN, "product": PRODUCT, "Pi": PRODUCT, "lukasiewicz": LUKASIEWICZ, "W": LUKASIEWICZ}


def tnorm_eval(T: TNorm, a: float, b: float) -> float:
    return T(a, b)


def tconorm_of(T: TNorm) -> Callable[[float, float], float]:
    """T*(a, b) = 1 - T(1 - a, 1 - b)."""
    if T.co is not None:
        co = T.co
    else:
        co = _conorm_boundaries(lambda a, b: 1.0 - T.fn(1.0 - a, 1.0 - b))

    def conorm(a: float, b: float) -> float:
        _check_unit(a, b)
        return float(co(a, b))

    conorm.__name__ = f"{T.name}*"
    return conorm


def dual(S: Callable[[float, float], float], name: str) -> TNorm:
    """The operation a, b -> 1 - S(1 - a, 1 - b); maps a conorm back to its t-norm."""
    return TNorm(name, lambda a, b: 1.0 - S(1.0 - a, 1.0 - b))


def table_tnorm(name: str, grid: Sequence[float], table: np.ndarray, atol: float = 1e-9) -> TNorm:
    """A t-norm given by values on a grid, bilinearly interpolated.

    Commutativity, monotonicity and the boundary law T(a, 1) = a are checked
    on every node, associativity on every node triple; any violation beyond
    atol raises ValueError.  Exact associativity between nodes is not
    guaranteed by interpolation, so this kind is meant for tests only.
    """
    grid = np.asarray(grid, dtype=float)
    table = np.asarray(table, dtype=float)
    n = len(grid)
    if table.shape != (n, n):
        raise ValueError(f"table shape {table.shape} does not match grid of {n} nodes")
    if grid[0] != 0.0 or grid[-1] != 1.0 or np.any(np.diff(grid) <= 0):
        raise ValueError("grid must increase strictly from 0 to 1")
    if np.any(table < -atol) or np.any(table > 1 + atol):
        raise ValueError("table values must lie in [0, 1]")

    def interp(a: float, b: float) -> float:
        i = min(int(np.searchsorted(grid, a, side="right")) - 1, n - 2)
        j = min(int(np.searchsorted(grid, b, side="right")) - 1, n - 2)
        s = (a - grid[i]) / (grid[i + 1] - grid[i])
        t = (b - grid[j]) / (grid[j + 1] - grid[j])
        return float(
            (1 - s) * (1 - t) * table[i, j]
            + s * (1 - t) * table[i + 1, j]
            + (1 - s) * t * table[i, j + 1]
            + s * t * table[i + 1, j + 1]
        )

    if np.max(np.abs(table - table.T)) > atol:
        raise ValueError(f"{name}: table is not commutative")
    if np.any(np.diff(table, axis=0) < -atol) or np.any(np.diff(table, axis=1) < -atol):
        raise ValueError(f"{name}: table is not nondecreasing")
    if np.max(np.abs(table[:, -1] - grid)) > atol:
        raise ValueError(f"{name}: T(a, 1) != a")
    for a, b, c in itertools.product(grid, repeat=3):
        if abs(interp(interp(a, b), c) - interp(a, interp(b, c))) > atol:
            raise ValueError(f"{name}: associativity fails at ({a}, {b}, {c})")
    return TNorm(name, interp)


def read_tnorm_table(path, name: str | None = None) -> TNorm:
    """Parse the ``TN v1`` format: a header line then ``a b v`` grid lines."""
    with open(path) as fh:
        lines = fh.read().splitlines()
    if not lines or lines[0].strip() != "TN v1":
        raise ValueError(f"{path}:1: expected header 'TN v1'")
    entries = {}
    for lineno, line in enumerate(lines[1:], start=2):
        if not line.strip() or line.lstrip().startswith("#"):
            continue
        parts = line.split()
        if len(parts) != 3:
            raise ValueError(f"{path}:{lineno}: expected 'a b v', got {line!r}")
        try:
            a, b, v = map(float, parts)
        except ValueError:
            raise ValueError(f"{path}:{lineno}: non-numeric entry {line!r}") from None
        entries[a, b] = v
    grid = sorted({a for a, _ in entries} | {b for _, b in entries})
    try:
        table = np.array([[entries[a, b] for b in grid] for a in grid])
    except KeyError as exc:
        raise ValueError(f"{path}: grid is incomplete, missing node {exc.args[0]}") from None
    return table_tnorm(name or str(path), grid, table)


def tau_T_conv(T: TNorm, F: DistFn, G: DistFn) -> DistFn:
    """tau_T(F, G)(x) = sup over u + v = x of T(F(u), G(v))."""
    if not F.xs or not G.xs:
        return DistFn()
    fx, fv = F.xs, F.vs
    gx, gv = G.xs, G.vs
    sums = np.add.outer(fx, gx).ravel()
    vals = np.array([T.fn(a, b) for a in fv for b in gv], dtype=float)
    order = np.lexsort((vals, sums))
    sums, vals = sums[order], np.maximum.accumulate(vals[order])
    last = np.ones(len(sums), dtype=bool)
    last[:-1] = sums[1:] != sums[:-1]
    return DistFn(tuple(sums[last].tolist()), tuple(vals[last].tolist()))


def _right_ends(F: DistFn):
    """Plateaus as (value, right end), including the zero plateau on (-inf, xs[0]]."""
    vals = (0.0,) + F.vs
    ends = F.xs + (np.inf,)
    return vals, ends


def tau_Tstar_conv(T: TNorm, F: DistFn, G: DistFn) -> DistFn:
    """tau_T*(F, G)(x) = left limit of inf over u + v = x of T*(F(u), G(v)).

    For plateau pairs the combination is attainable at x only while
    x <= (right end of F's plateau) + (right end of G's plateau), and lower
    pairs dominate, so the inf is a suffix min over those end sums.  The
    result is already left-continuous.
    """
    S = tconorm_of(T)
    fv, fe = _right_ends(F)
    gv, ge = _right_ends(G)
    ends = np.add.outer(np.asarray(fe), np.asarray(ge)).ravel()
    vals = np.array([S(a, b) for a in fv for b in gv], dtype=float)
    order = np.lexsort((vals, -ends))  # descending ends
    ends, vals = ends[order], np.minimum.accumulate(vals[order])
    # vals[k] is now the min over all pairs with end >= ends[k]
    xs, vs = [], []
    uniq = []
    for e, v in zip(ends, vals):
        if uniq and uniq[-1][0] == e:
            uniq[-1] = (e, v)
        else:
            uniq.append((e, v))
    uniq.reverse()  # ascending ends; value on (previous end, e] is v
    for k in range(len(uniq) - 1):
        e, _ = uniq[k]
        xs.append(e)
        vs.append(uniq[k + 1][1])
    if not uniq or uniq[0][1] != 0.0:
        raise AssertionError("inf-convolution must vanish up to the smallest end sum")
    if uniq[-1][0] != np.inf:
        raise AssertionError("last end sum must be +inf")
    return DistFn(tuple(float(x) for x in xs), tuple(float(v) for v in vs))


@dataclass(frozen=True)
class TriangleFn:
    """tau_T (sup-convolution) or tau_T* (inf-convolution) built on a t-norm T."""

    kind: str  # "sup" for tau_T, "inf" for tau_T*
    tnorm: TNorm

    def __post_init__(self):
        if self.kind not in ("sup", "inf"):
            raise ValueError(f"unknown triangle-function kind {self.kind!r}")

    def __call__(self, F: DistFn, G: DistFn) -> DistFn:
        if self.kind == "sup":
            return tau_T_conv(self.tnorm, F, G)
        return tau_Tstar_conv(self.tnorm, F, G)

    @property
    def name(self) -> str:
        short = {"min": "M", "product": "Pi", "lukasiewicz": "W"}.get(self.tnorm.name, self.tnorm.name)
        return f"tau_{short}" + ("*" if self.kind == "inf" else "")

    def __repr__(self):
        return self.name


TAU_M = TriangleFn("sup", MIN)
TAU_M_STAR = TriangleFn("inf", MIN)
TAU_PI = TriangleFn("sup", PRODUCT)
TAU_PI_STAR = TriangleFn("inf", PRODUCT)
TAU_W = TriangleFn("sup", LUKASIEWICZ)
TAU_W_STAR = TriangleFn("inf", LUKASIEWICZ)
TRIANGLE_FUNCTIONS = {t.name: t for t in (TAU_M, TAU_M_STAR, TAU_PI, TAU_PI_STAR, TAU_W, TAU_W_STAR)}


def triangle_by_name(name: str) -> TriangleFn:
    try:
        return TRIANGLE_FUNCTIONS[name]
    except KeyError:
        raise ValueError(f"unknown triangle function {name!r}; choose from {sorted(TRIANGLE_FUNCTIONS)}") from None


def tau_iterate(tau: TriangleFn, Fs: Sequence[DistFn], n: int | None = None) -> DistFn:
    """tau^n(F_1, ..., F_{n+1}), folding from the left."""
    if n is None:
        n = len(Fs) - 1
    if n < 1 or len(Fs) != n + 1:
        raise ValueError(f"tau^{n} needs {n + 1} arguments, got {len(Fs)}")
    out = Fs[0]
    for F in Fs[1:]:
        out = tau(out, F)
    return out


def check_dominates(tau1: TriangleFn, tau2: TriangleFn, quadruples, seed: int | None = None,
                    atol: float = 1e-9) -> VerificationReport:
    """Sampled falsifier for tau1 >> tau2:

    tau1(tau2(F1, G1), tau2(F2, G2)) >= tau2(tau1(F1, F2), tau1(G1, G2)).

    Both sides add breakpoints in different orders, so the comparison allows
    ``atol`` of abscissa round-off.
    """
    worst = WorstCase()
    n = 0
    for k, (F1, F2, G1, G2) in enumerate(quadruples):
        lhs = tau1(tau2(F1, G1), tau2(F2, G2))
        rhs = tau2(tau1(F1, F2), tau1(G1, G2))
        worst.update(df_margin(rhs, lhs, atol), lambda: {"index": k, "F1": F1, "F2": F2, "G1": G1, "G2": G2, "lhs": lhs, "rhs": rhs})
        n += 1
    return VerificationReport(
        check=f"dominates({tau1.name}, {tau2.name})",
        passed=worst.margin >= 0,
        samples=n,
        seed=seed,
        margin=worst.value,
        witness=worst.witness if worst.margin < 0 else None,
    )


def check_archimedean(tau: TriangleFn, pairs, seed: int | None = None) -> VerificationReport:
    """Per pair (F, G) with F != eps_inf and G != eps0: tau(F, G) <= F and tau(F, G) != F."""
    failures = []
    n = 0
    for k, (F, G) in enumerate(pairs):
        if F.is_eps_inf or G.is_eps0:
            raise ValueError(f"pair {k} violates the precondition F != eps_inf, G != eps0")
        out = tau(F, G)
        n += 1
        if not (df_leq(out, F) and out != F):
            failures.append({"index": k, "F": F, "G": G, "tau": out})
    return VerificationReport(
        check=f"archimedean({tau.name})",
        passed=not failures,
        samples=n,
        seed=seed,
        witness=failures[0] if failures else None,
        details={"failures": len(failures)},
    )


def check_sup_continuity(tau: TriangleFn, family: Sequence[DistFn], G: DistFn) -> VerificationReport:
    """sup_k tau(F_k, G) == tau(sup_k F_k, G) on a finite family."""
    if not family:
        raise ValueError("family must be nonempty")
    lhs = df_pointwise_sup([tau(F, G) for F in family])
    rhs = tau(df_pointwise_sup(family), G)
    ok = lhs == rhs
    return VerificationReport(
        check=f"sup_continuity({tau.name})",
        passed=ok,
        samples=len(family),
        margin=min(df_margin(lhs, rhs), df_margin(rhs, lhs)),
        witness=None if ok else {"sup_of_tau": lhs, "tau_of_sup": rhs},
    )


def check_eps_calculus(tau: TriangleFn, ab_pairs) -> bool:
    """tau(eps_a, eps_b) == eps_{a+b} structurally for every sampled (a, b)."""
    return all(tau(unit_step(a), unit_step(b)) == unit_step(a + b) for a, b in ab_pairs)


def check_order(tau: TriangleFn, tau_star: TriangleFn, pairs) -> bool:
    """tau <= tau_star pointwise on sampled pairs."""
    return all(df_leq(tau(F, G), tau_star(F, G)) for F, G in pairs)
