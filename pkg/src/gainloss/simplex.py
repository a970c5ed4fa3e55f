"""Nelder-Mead downhill simplex minimisation.

Standard reflection / expansion / contraction / shrink moves with the usual
coefficients (1, 2, 1/2, 1/2).  Termination is on simplex size: the largest
vertex distance from the best vertex, measured relative to the size of the
best vertex, must drop below ``xtol``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass
class SimplexResult:
    x: np.ndarray
    fun: float
    nfev: int
    converged: bool


def _diameter(simplex: np.ndarray) -> float:
    best = simplex[0]
    spread = np.max(np.abs(simplex[1:] - best))
    return spread / max(1.0, np.max(np.abs(best)))


def nelder_mead(f, x0, step=None, xtol=1e-8, maxfev=2000) -> SimplexResult:
    """Minimise ``f`` starting from ``x0``.

    ``step`` sets the initial simplex edge along each axis (default: 10% of
    the coordinate, or 0.05 where the coordinate is zero).  Non-finite
    objective values are treated as +inf so the simplex backs away from them.
    """
    x0 = np.asarray(x0, dtype=float)
    n = x0.size
    if step is None:
        step = np.where(x0 != 0, 0.1 * np.abs(x0), 0.05)
    step = np.broadcast_to(np.asarray(step, dtype=float), (n,))

    nfev = 0

    def fun(x):
        nonlocal nfev
        nfev += 1
        v = f(x)
        return v if np.isfinite(v) else np.inf

    simplex = np.vstack([x0] + [x0 + step[i] * np.eye(n)[i] for i in range(n)])
    fvals = np.array([fun(v) for v in simplex])

    converged = False
    while True:
        order = np.argsort(fvals, kind="stable")
        simplex, fvals = simplex[order], fvals[order]
        if _diameter(simplex) < xtol:
            converged = True
            break
        if nfev >= maxfev:
            break

        centroid = simplex[:-1].mean(axis=0)
        worst = simplex[-1]
        xr = centroid + (centroid - worst)
        fr = fun(xr)
        if fr < fvals[0]:
            xe = centroid + 2.0 * (centroid - worst)
            fe = fun(xe)
            if fe < fr:
                simplex[-1], fvals[-1] = xe, fe
            else:
                simplex[-1], fvals[-1] = xr, fr
            continue
        if fr < fvals[-2]:
            simplex[-1], fvals[-1] = xr, fr
            continue
        if fr < fvals[-1]:
            xc = centroid + 0.5 * (xr - centroid)
            fc = fun(xc)
            if fc <= fr:
                simplex[-1], fvals[-1] = xc, fc
                continue
        else:
            xc = centroid + 0.5 * (worst - centroid)
            fc = fun(xc)
            if fc < fvals[-1]:
                simplex[-1], fvals[-1] = xc, fc
                continue
        # shrink toward the best vertex
        simplex[1:] = simplex[0] + 0.5 * (simplex[1:] - simplex[0])
        fvals[1:] = [fun(v) for v in simplex[1:]]

    return SimplexResult(simplex[0].copy(), float(fvals[0]), nfev, converged)
