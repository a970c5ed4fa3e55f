"""Seeded synthetic price generators.

``generate_gbm`` gives a single i.i.d.-return path (the null model for the
scrambling test).  ``generate_regime_panel`` gives a stock panel driven by a
hidden up/down regime chain in which stocks co-move more strongly during
downturns.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np

from .index_builder import PricePanel
from .series_core import PriceSeries


@dataclass(frozen=True)
class GbmSpec:
    mu: float = 0.0
    sigma: float = 0.01
    T: int = 100_000
    seed: int = 0
    s0: float = 1.0

    def __post_init__(self):
        if self.sigma < 0:
            raise ValueError("sigma must be >= 0")
        if self.T < 1:
            raise ValueError("T must be >= 1")
        if not self.s0 > 0:
            raise ValueError("s0 must be positive")

    def as_dict(self):
        return asdict(self)


@dataclass(frozen=True)
class RegimeSpec:
    N: int = 12
    T: int = 100_000
    p_down: float = 1 / 3
    regime_mean_length: float = 20.0
    rho_up: float = 0.1
    rho_down: float = 0.6
    drift_up: float = 4e-4
    drift_down: float = -8e-4
    sigma: float = 0.01
    seed: int = 0

    def __post_init__(self):
        if self.N < 2:
            raise ValueError("N must be >= 2")
        if self.T < 1:
            raise ValueError("T must be >= 1")
        if not 0 <= self.p_down <= 1:
            raise ValueError("p_down must lie in [0, 1]")
        if self.regime_mean_length < 1:
            raise ValueError("regime_mean_length must be >= 1")
        # equality is allowed so the same generator also yields the uncoupled null
        if not 0 <= self.rho_up <= self.rho_down <= 1:
            raise ValueError("need 0 <= rho_up <= rho_down <= 1")
        if self.sigma < 0:
            raise ValueError("sigma must be >= 0")

    def as_dict(self):
        return asdict(self)


def generate_gbm(spec: GbmSpec) -> PriceSeries:
    rng = np.random.default_rng(spec.seed)
    r = spec.mu + spec.sigma * rng.standard_normal(spec.T)
    path = np.empty(spec.T + 1)
    path[0] = spec.s0
    path[1:] = spec.s0 * np.exp(np.cumsum(r))
    return PriceSeries(path, label=f"gbm[{spec.seed}]")


def regime_path(spec: RegimeSpec, rng: np.random.Generator) -> np.ndarray:
    """Boolean per day 1..T, True on downturn days.

    Regimes are blocks with geometric lengths (mean ``regime_mean_length``);
    each block is a downturn independently with probability ``p_down``.
    """
    down = np.empty(spec.T, dtype=bool)
    p_end = 1.0 / spec.regime_mean_length
    filled = 0
    while filled < spec.T:
        length = int(rng.geometric(p_end))
        state = rng.random() < spec.p_down
        down[filled : filled + length] = state
        filled += length
    return down


def generate_regime_panel(spec: RegimeSpec, s0: float = 1.0) -> PricePanel:
    """Equicorrelated Gaussian log returns with regime-dependent drift and correlation.

    Each day's returns are ``drift + sigma * (sqrt(rho) * F + sqrt(1 - rho) * e_n)``
    with one common factor ``F`` and idiosyncratic ``e_n``, giving pairwise
    correlation exactly ``rho`` for the day's regime.
    """
    rng = np.random.default_rng(spec.seed)
    down = regime_path(spec, rng)
    common = rng.standard_normal(spec.T)
    idio = rng.standard_normal((spec.N, spec.T))
    rho = np.where(down, spec.rho_down, spec.rho_up)
    drift = np.where(down, spec.drift_down, spec.drift_up)
    r = drift + spec.sigma * (np.sqrt(rho) * common + np.sqrt(1.0 - rho) * idio)
    matrix = np.empty((spec.N, spec.T + 1))
    matrix[:, 0] = s0
    matrix[:, 1:] = s0 * np.exp(np.cumsum(r, axis=1))
    names = tuple(f"S{n + 1:02d}" for n in range(spec.N))
    return PricePanel(names, matrix)
