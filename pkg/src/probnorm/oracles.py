"""Brute-force reference computations used to cross-check the exact algorithms.

These evaluate the defining formulas on grids and share no code with the
piece-enumeration routines in ``distfn`` and ``trifn``.
"""

from __future__ import annotations

import numpy as np

from .distfn import DistFn

NUDGE = 1e-10

GRID_TNORMS = {
    "min": np.minimum,
    "product": np.multiply,
    "lukasiewicz": lambda a, b: np.maximum(a + b - 1.0, 0.0),
}


def _eval(F: DistFn, x: np.ndarray) -> np.ndarray:
    """F at x, straight from the encoding: the value of the last breakpoint strictly below x."""
    xs = np.asarray(F.xs, dtype=float)
    vs = np.concatenate([[0.0], np.asarray(F.vs, dtype=float)])
    out = vs[np.searchsorted(xs, x, side="left")]
    return np.where(np.isposinf(x), 1.0, out)


def _condition_on_grid(F: DistFn, G: DistFn, hs: np.ndarray) -> np.ndarray:
    """For each h, whether both (F,G;h) and (G,F;h) hold at all probe points in (-1/h, 1/h)."""
    base = np.unique(np.concatenate([F.xs, G.xs, [0.0]]))
    h = hs[:, None]
    offsets = [base[None, :] + s * h + e for s in (-1.0, 0.0, 1.0) for e in (-NUDGE, 0.0, NUDGE)]
    ends = [1.0 / h - NUDGE, -1.0 / h + NUDGE]
    x = np.concatenate(offsets + ends, axis=1)
    inside = np.abs(x) < 1.0 / h
    ok = np.ones(x.shape, dtype=bool)
    for A, B in ((F, G), (G, F)):
        lo = _eval(A, x - h) - h <= _eval(B, x)
        hi = _eval(B, x) <= _eval(A, x + h) + h
        ok &= lo & hi
    return np.all(ok | ~inside, axis=1)


def sibley_grid(F: DistFn, G: DistFn, step: float = 1e-4) -> float:
    """Least grid value h in (0, 1] where the Levy-type band condition holds in both directions.

    The condition is monotone in h, so a coarse pass brackets the answer
    and the fine grid is scanned only inside the bracket.
    """
    coarse = np.arange(1, 101) * 1e-2
    hit = _condition_on_grid(F, G, coarse)
    if not hit.any():
        return 1.0
    hc = coarse[np.argmax(hit)]
    k = np.arange(int(round((hc - 1e-2) / step)) + 1, int(round(hc / step)) + 1)
    fine = k * step
    good = _condition_on_grid(F, G, fine)
    return float(fine[np.argmax(good)]) if good.any() else float(hc)


def tau_sup_grid(tnorm: str, F: DistFn, G: DistFn, x: float, du: float = 1e-3) -> float:
    """sup_{u+v=x} T(F(u), G(v)) with u on a midpoint grid of (0, x)."""
    if x <= 0:
        return 0.0
    u = (np.arange(int(np.ceil(x / du))) + 0.5) * du
    u = u[u < x]
    T = GRID_TNORMS[tnorm]
    return float(np.max(T(_eval(F, u), _eval(G, x - u)), initial=0.0))


def tau_inf_grid(tnorm: str, F: DistFn, G: DistFn, x: float, du: float = 1e-3) -> float:
    """inf_{u+v=x} T*(F(u), G(v)) for x away from the breakpoints of the result.

    u <= 0 contributes G(x) and u >= x contributes F(x); the interior is gridded.
    """
    if x <= 0:
        return 0.0
    T = GRID_TNORMS[tnorm]
    u = (np.arange(int(np.ceil(x / du))) + 0.5) * du
    u = u[u < x]
    a, b = _eval(F, u), _eval(G, x - u)
    conorm = 1.0 - T(1.0 - a, 1.0 - b)
    ends = _eval(F, np.array([x]))[0], _eval(G, np.array([x]))[0]
    return float(min(np.min(conorm, initial=1.0), *ends))
