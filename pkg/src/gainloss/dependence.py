"""Dependence between index constituents during index upturns and downturns.

The index history is cut into consecutive windows of ``L`` days.  Days of a
window whose index level rose go to the up set, days of a falling window to
the down set.  On each set, every stock's log returns are paired with the
log returns of the index built from all *other* stocks, and the pairs are
summarised by plug-in mutual information and Pearson correlation, averaged
over stocks.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .index_builder import PricePanel, build_index, leave_one_out_index
from .series_core import PriceSeries

DEFAULT_WINDOWS = tuple(range(5, 101, 5))
MIN_SAMPLES_PER_BIN = 10


class DependenceError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class WindowPartition:
    L: int
    up_days: np.ndarray        # 1-based day indices t, return on day t is log(I_t / I_{t-1})
    down_days: np.ndarray
    flat_windows: int
    tail_days_dropped: int
    window_changes: np.ndarray = field(repr=False, default=None)


@dataclass(frozen=True)
class BinningSpec:
    bins_per_margin: int = 8
    scheme: str = "quantile"

    def __post_init__(self):
        if self.bins_per_margin < 2:
            raise ValueError("bins_per_margin must be >= 2")
        if self.scheme != "quantile":
            raise ValueError(f"unsupported binning scheme {self.scheme!r}")

    @property
    def min_samples(self) -> int:
        return MIN_SAMPLES_PER_BIN * self.bins_per_margin


def partition_updown(index: PriceSeries, L: int) -> WindowPartition:
    L = int(L)
    if L < 1:
        raise DependenceError("window length must be >= 1")
    T = index.T
    if T < L:
        raise DependenceError(f"series has T={T} days, shorter than window length {L}")
    K = T // L
    levels = index.values[: K * L + 1 : L]
    delta = np.diff(levels)
    days = np.arange(1, K * L + 1).reshape(K, L)
    return WindowPartition(
        L=L,
        up_days=days[delta > 0].ravel(),
        down_days=days[delta < 0].ravel(),
        flat_windows=int(np.count_nonzero(delta == 0)),
        tail_days_dropped=T - K * L,
        window_changes=delta,
    )


def _check_pair(x, y):
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.ndim != 1 or x.shape != y.shape:
        raise DependenceError("samples must be 1-d and of equal length")
    if not (np.all(np.isfinite(x)) and np.all(np.isfinite(y))):
        raise DependenceError("samples must be finite")
    return x, y


def quantile_bins(x, B: int) -> np.ndarray:
    """Bin label 0..B-1 per sample from its stable rank: floor(rank * B / n)."""
    x = np.asarray(x)
    n = x.size
    ranks = np.empty(n, dtype=np.int64)
    ranks[np.argsort(x, kind="stable")] = np.arange(n)
    return ranks * B // n


def _mi_from_bins(bx: np.ndarray, by: np.ndarray, B: int) -> float:
    n = bx.size
    joint = np.bincount(bx * B + by, minlength=B * B).reshape(B, B)
    px = joint.sum(axis=1)
    py = joint.sum(axis=0)
    i, j = np.nonzero(joint)
    c = joint[i, j].astype(float)
    mi = float(np.sum(c / n * np.log(c * n / (px[i].astype(float) * py[j]))))
    return max(mi, 0.0)


def plugin_mutual_information(x, y, binning: BinningSpec = BinningSpec()) -> float:
    """Plug-in mutual information (nats) after quantile discretisation of each margin."""
    x, y = _check_pair(x, y)
    B = binning.bins_per_margin
    if x.size < binning.min_samples:
        raise DependenceError(f"need >= {binning.min_samples} samples for {B} bins, got {x.size}")
    for name, v in (("x", x), ("y", y)):
        if v.min() == v.max():
            raise DependenceError(f"zero-entropy margin: {name} is constant")
    return _mi_from_bins(quantile_bins(x, B), quantile_bins(y, B), B)


def pearson_correlation(x, y) -> float:
    x, y = _check_pair(x, y)
    if x.size < 2:
        raise DependenceError("need >= 2 samples")
    xc = x - x.mean()
    yc = y - y.mean()
    sxx = float(xc @ xc)
    syy = float(yc @ yc)
    if sxx == 0 or syy == 0:
        raise DependenceError("correlation undefined for a constant margin")
    return float(np.clip((xc @ yc) / math.sqrt(sxx * syy), -1.0, 1.0))


class _StockPairs:
    """Per-stock return pairs (stock, leave-one-out index) with cached sort orders.

    Restricting a stable argsort of the full series to a subset yields the
    stable order of the subset, so quantile bins on any day set come from
    one cumulative count instead of a fresh sort.
    """

    def __init__(self, panel: PricePanel):
        self.N = panel.N
        self.T = panel.T
        self.stock = np.diff(np.log(panel.matrix), axis=1)
        self.loo = np.vstack([np.diff(np.log(leave_one_out_index(panel, n).values))
                              for n in range(panel.N)])
        self.order_stock = np.argsort(self.stock, axis=1, kind="stable")
        self.order_loo = np.argsort(self.loo, axis=1, kind="stable")

    @staticmethod
    def _subset_bins(order: np.ndarray, mask: np.ndarray, B: int) -> np.ndarray:
        inside = mask[order]
        m = int(np.count_nonzero(inside))
        ranks = np.empty(order.size, dtype=np.int64)
        ranks[order] = np.cumsum(inside) - 1
        return ranks[mask] * B // m

    def measures(self, days: np.ndarray, binning: BinningSpec) -> tuple[float, float]:
        """Mean MI and mean correlation over stocks, on the given 1-based days."""
        B = binning.bins_per_margin
        mask = np.zeros(self.T, dtype=bool)
        mask[days - 1] = True
        mis, cors = [], []
        for n in range(self.N):
            x = self.stock[n, mask]
            y = self.loo[n, mask]
            for name, v in (("stock", x), ("index", y)):
                if v.min() == v.max():
                    raise DependenceError(f"zero-entropy margin: {name} returns constant for stock {n}")
            bx = self._subset_bins(self.order_stock[n], mask, B)
            by = self._subset_bins(self.order_loo[n], mask, B)
            mis.append(_mi_from_bins(bx, by, B))
            cors.append(pearson_correlation(x, y))
        return float(np.mean(mis)), float(np.mean(cors))


@dataclass(frozen=True)
class DependenceRow:
    L: int
    M_U: float | None
    M_D: float | None
    C_U: float | None
    C_D: float | None
    n_up: int
    n_down: int
    flat_windows: int = 0
    tail_days_dropped: int = 0
    note: str = ""

    @property
    def present(self) -> bool:
        return self.M_U is not None


@dataclass
class DependenceReport:
    rows: list[DependenceRow]
    binning: BinningSpec
    log_base: str = "e"
    estimator: str = "plug-in"
    equalized: bool = False

    def metadata(self) -> dict:
        return {
            "bins_per_margin": self.binning.bins_per_margin,
            "binning_scheme": self.binning.scheme,
            "log_base": self.log_base,
            "units": "nats",
            "estimator": self.estimator,
            "equalized_sample_sizes": self.equalized,
        }


def _equalize(up, down, seed):
    rng = np.random.default_rng(seed)
    k = min(up.size, down.size)
    up = np.sort(rng.choice(up, size=k, replace=False)) if up.size > k else up
    down = np.sort(rng.choice(down, size=k, replace=False)) if down.size > k else down
    return up, down


def _row(pairs, index, L, binning, equalize_seed):
    part = partition_updown(index, L)
    up, down = part.up_days, part.down_days
    if equalize_seed is not None:
        up, down = _equalize(up, down, equalize_seed)
    for name, days in (("U (up days)", up), ("D (down days)", down)):
        if days.size < binning.min_samples:
            raise DependenceError(
                f"set {name} has {days.size} days at L={L}, need >= {binning.min_samples}")
    m_u, c_u = pairs.measures(up, binning)
    m_d, c_d = pairs.measures(down, binning)
    return DependenceRow(L, m_u, m_d, c_u, c_d, int(up.size), int(down.size),
                         part.flat_windows, part.tail_days_dropped)


def mean_dependence(panel: PricePanel, L: int, binning: BinningSpec = BinningSpec(),
                    equalize_seed: int | None = None) -> DependenceRow:
    """Mean MI and mean correlation on index up-days and down-days for one window length.

    Raises DependenceError if either day set is too small for the binning.
    With ``equalize_seed`` set, the larger day set is randomly thinned to
    the size of the smaller one.
    """
    return _row(_StockPairs(panel), build_index(panel), L, binning, equalize_seed)


def dependence_sweep(panel: PricePanel, L_values=DEFAULT_WINDOWS,
                     binning: BinningSpec = BinningSpec(),
                     equalize_seed: int | None = None) -> DependenceReport:
    rows = []
    L_values = list(L_values)
    if L_values:
        pairs = _StockPairs(panel)
        index = build_index(panel)
    for L in L_values:
        try:
            rows.append(_row(pairs, index, L, binning, equalize_seed))
        except DependenceError as exc:
            rows.append(DependenceRow(int(L), None, None, None, None, 0, 0, note=str(exc)))
    return DependenceReport(rows, binning, equalized=equalize_seed is not None)
