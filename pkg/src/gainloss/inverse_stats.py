"""Inverse statistics: first passage times of log-return barriers.

For every start day ``t`` the waiting time is the smallest ``s >= 1`` with
``log(I[t+s] / I[t]) >= rho`` (``rho > 0``) or ``<= rho`` (``rho < 0``).
Starts that never reach the barrier before the series ends are censored:
counted, but left out of the empirical distribution.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import integrate
from scipy.special import gammaln

from .series_core import PriceSeries
from .simplex import nelder_mead

# Crossing test slack, in log-return units.  Keeps exact-arithmetic crossings
# (e.g. a 1%/day drift hitting 5% on day 5) from being lost to round-off.
CROSSING_ATOL = 1e-12

MIN_FIT_SUPPORT = 8


class InsufficientCrossings(ValueError):
    """A barrier produced too few (or no) first passage observations."""


@dataclass(frozen=True)
class Barrier:
    rho: float

    def __post_init__(self):
        if not (math.isfinite(self.rho) and self.rho != 0):
            raise ValueError("barrier level must be finite and nonzero")

    @property
    def up(self) -> bool:
        return self.rho > 0


@dataclass(frozen=True, eq=False)
class FptSamples:
    rho: float
    waits: np.ndarray          # days to first crossing, one per uncensored start
    starts: np.ndarray         # start day of each entry in ``waits``
    starts_total: int
    starts_censored: int

    def __len__(self):
        return self.waits.size


@dataclass(frozen=True, eq=False)
class EmpiricalPmf:
    support: np.ndarray        # 1..t_max
    mass: np.ndarray
    n_samples: int
    truncated: bool = False
    rho: float | None = None

    def as_dict(self) -> dict:
        return {int(t): float(m) for t, m in zip(self.support, self.mass) if m > 0}


def _prefix_max_table(x: np.ndarray) -> list[np.ndarray]:
    table = [x]
    k = 1
    while 2 * k <= x.size:
        prev = table[-1]
        table.append(np.maximum(prev[:-k], prev[k:]))
        k *= 2
    return table


def _first_reach(level: np.ndarray, thresh: np.ndarray) -> np.ndarray:
    """For each t, smallest j > t with level[j] >= thresh[t], or -1.

    Greedy binary lifting over a sparse table of block maxima: from the
    largest block down, skip a block whenever none of its entries reaches
    the threshold.  O(T log T) time, fully vectorised.
    """
    n = level.size
    table = _prefix_max_table(level)
    pos = np.arange(1, n)                     # search begins the day after t
    th = thresh[:-1]
    for k in range(len(table) - 1, -1, -1):
        width = 1 << k
        blk = table[k]
        ok = pos + width <= n
        idx = np.flatnonzero(ok)
        skip = blk[pos[idx]] < th[idx]
        pos[idx[skip]] += width
    hit = pos < n
    hit[hit] = level[pos[hit]] >= th[hit]
    return np.where(hit, pos, -1)


def first_passage_times(prices: PriceSeries, barrier: Barrier | float) -> FptSamples:
    if not isinstance(barrier, Barrier):
        barrier = Barrier(float(barrier))
    rho = barrier.rho
    logp = np.log(prices.values)
    if rho > 0:
        level, thresh = logp, logp + rho - CROSSING_ATOL
    else:
        level, thresh = -logp, -logp - rho - CROSSING_ATOL
    reach = _first_reach(level, thresh)
    starts = np.flatnonzero(reach >= 0)
    waits = reach[starts] - starts
    T = prices.T
    return FptSamples(rho, waits.astype(np.int64), starts.astype(np.int64), T, T - starts.size)


def empirical_pmf(samples: FptSamples, t_max: int | None = None) -> EmpiricalPmf:
    waits = samples.waits
    if waits.size == 0:
        raise InsufficientCrossings(f"no crossings for this barrier (rho={samples.rho:g})")
    longest = int(waits.max())
    if t_max is None:
        t_max = longest
    if t_max < 1:
        raise ValueError("t_max must be a positive integer")
    counts = np.bincount(waits, minlength=t_max + 1)[1 : t_max + 1]
    return EmpiricalPmf(
        support=np.arange(1, t_max + 1),
        mass=counts / waits.size,
        n_samples=int(waits.size),
        truncated=t_max < longest,
        rho=samples.rho,
    )


def average_pmfs(pmfs: list[EmpiricalPmf]) -> EmpiricalPmf:
    """Equal-weight mixture of several pmfs (e.g. over scramble replicates)."""
    if not pmfs:
        raise ValueError("nothing to average")
    t_max = max(int(p.support[-1]) for p in pmfs)
    mass = np.zeros(t_max)
    for p in pmfs:
        mass[: p.mass.size] += p.mass
    return EmpiricalPmf(
        support=np.arange(1, t_max + 1),
        mass=mass / len(pmfs),
        n_samples=sum(p.n_samples for p in pmfs),
        truncated=any(p.truncated for p in pmfs),
        rho=pmfs[0].rho,
    )


def gen_gamma_pdf(t, a, d, p, t0=0.0):
    """Generalized gamma density shifted to start at ``t0``.

    f(t) = p / (a**d * Gamma(d/p)) * (t - t0)**(d - 1) * exp(-((t - t0)/a)**p)
    for t > t0, zero elsewhere.
    """
    t = np.asarray(t, dtype=float)
    u = t - t0
    out = np.zeros_like(u)
    pos = u > 0
    up = u[pos]
    with np.errstate(over="ignore", under="ignore", invalid="ignore"):
        logf = (math.log(p) - d * math.log(a) - gammaln(d / p)
                + (d - 1) * np.log(up) - (up / a) ** p)
        out[pos] = np.exp(logf)
    return out if out.ndim else float(out)


@dataclass(frozen=True)
class GenGammaFit:
    a: float
    d: float
    p: float
    t0: float
    objective: float
    converged: bool
    nfev: int = 0

    def pdf(self, t):
        return gen_gamma_pdf(t, self.a, self.d, self.p, self.t0)

    def mode(self) -> float:
        if self.d > 1:
            return self.t0 + self.a * ((self.d - 1) / self.p) ** (1 / self.p)
        return self.t0

    def total_mass(self) -> float:
        """Numerical integral of the density over (t0, inf)."""
        f = lambda u: float(gen_gamma_pdf(u, self.a, self.d, self.p, 0.0))
        # split at the scale so quad resolves both the peak and the tail
        head, _ = integrate.quad(f, 0, self.a, limit=200, epsabs=1e-12, epsrel=1e-10)
        tail, _ = integrate.quad(f, self.a, np.inf, limit=200, epsabs=1e-12, epsrel=1e-10)
        return head + tail

    def as_dict(self) -> dict:
        return {"a": self.a, "d": self.d, "p": self.p, "t0": self.t0,
                "objective": self.objective, "converged": self.converged, "nfev": self.nfev}


def _unpack(theta):
    return math.exp(theta[0]), math.exp(theta[1]), math.exp(theta[2]), abs(theta[3])


def fit_gen_gamma(pmf: EmpiricalPmf, restarts: int = 3, maxfev: int = 2000,
                  xtol: float = 1e-8, seed: int = 0) -> GenGammaFit:
    """Weighted least-squares fit of the shifted generalized gamma density.

    Minimises sum(mass * (f(t) - mass)**2) over bins with positive mass, in
    log-parameters for a, d, p.  The first Nelder-Mead run starts at
    a = pmf mean, d = 2, p = 1, t0 = 0; each restart begins from the best
    point so far with a seeded multiplicative jitter.
    """
    keep = pmf.mass > 0
    if np.count_nonzero(keep) < MIN_FIT_SUPPORT:
        raise InsufficientCrossings(
            f"generalized gamma fit needs >= {MIN_FIT_SUPPORT} support points with positive mass")
    t = pmf.support[keep].astype(float)
    m = pmf.mass[keep]
    mean = float(np.sum(t * m) / np.sum(m))

    def loss(theta):
        a, d, p, t0 = _unpack(theta)
        if not (1e-8 < a < 1e8 and 1e-4 < d < 1e4 and 1e-3 < p < 1e3):
            return np.inf
        return float(np.sum(m * (gen_gamma_pdf(t, a, d, p, t0) - m) ** 2))

    start = np.array([math.log(mean), math.log(2.0), 0.0, 0.0])
    best = nelder_mead(loss, start, step=[0.2, 0.2, 0.2, 0.2], xtol=xtol, maxfev=maxfev)
    nfev = best.nfev
    rng = np.random.default_rng(seed)
    for _ in range(restarts):
        jitter = rng.normal(0.0, 0.1, size=4)
        res = nelder_mead(loss, best.x + jitter, step=[0.2, 0.2, 0.2, 0.2],
                          xtol=xtol, maxfev=maxfev)
        nfev += res.nfev
        if res.fun <= best.fun:
            best = res
    a, d, p, t0 = _unpack(best.x)
    ok = bool(best.converged and np.isfinite(best.fun))
    return GenGammaFit(a, d, p, float(t0), float(best.fun), ok, nfev)


def empirical_mode(pmf: EmpiricalPmf) -> int:
    return int(pmf.support[int(np.argmax(pmf.mass))])


def most_likely_time(fit: GenGammaFit | None, pmf: EmpiricalPmf) -> tuple[float | None, int]:
    fitted = fit.mode() if fit is not None and fit.converged else None
    return fitted, empirical_mode(pmf)


@dataclass(frozen=True)
class AsymmetrySummary:
    rho_abs: float
    mode_gain: int
    mode_loss: int
    waits_gain: int
    waits_loss: int

    @property
    def statistic(self) -> int:
        return self.mode_gain - self.mode_loss


def asymmetry_summary(prices: PriceSeries, rho_abs: float, min_waits: int = 30) -> AsymmetrySummary:
    if not rho_abs > 0:
        raise ValueError("rho_abs must be positive")
    modes = {}
    counts = {}
    for rho in (rho_abs, -rho_abs):
        s = first_passage_times(prices, Barrier(rho))
        if len(s) < min_waits:
            raise InsufficientCrossings(
                f"barrier rho={rho:+g} has {len(s)} crossings, need >= {min_waits}")
        modes[rho] = empirical_mode(empirical_pmf(s))
        counts[rho] = len(s)
    return AsymmetrySummary(rho_abs, modes[rho_abs], modes[-rho_abs],
                            counts[rho_abs], counts[-rho_abs])


def asymmetry_stat(prices: PriceSeries, rho_abs: float, min_waits: int = 30) -> int:
    """Empirical mode at +rho minus empirical mode at -rho, in days.

    Positive when losses of size rho are most likely reached sooner than
    gains of the same size.
    """
    return asymmetry_summary(prices, rho_abs, min_waits).statistic
