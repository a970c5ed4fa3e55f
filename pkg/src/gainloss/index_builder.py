"""Equal-weight artificial index and its leave-one-out variants."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .series_core import PriceSeries, SeriesError


@dataclass(frozen=True, eq=False)
class PricePanel:
    """Closing prices of N stocks on a shared day grid; ``matrix[n, t]``."""

    names: tuple[str, ...]
    matrix: np.ndarray
    dates: tuple[str, ...] | None = None

    def __post_init__(self):
        m = np.array(self.matrix, dtype=float)
        if m.ndim != 2:
            raise SeriesError(f"panel must be 2-d (stocks x days), got shape {m.shape}")
        object.__setattr__(self, "names", tuple(str(x) for x in self.names))
        if len(self.names) != m.shape[0]:
            raise SeriesError("one name per panel row required")
        if len(set(self.names)) != len(self.names):
            raise SeriesError("stock names must be unique")
        if m.shape[0] < 2:
            raise SeriesError("panel needs at least 2 stocks")
        if m.shape[1] < 2:
            raise SeriesError("length >= 2 required")
        bad = np.argwhere(~(np.isfinite(m) & (m > 0)))
        if bad.size:
            n, t = bad[0]
            raise SeriesError(f"non-positive or missing price for {self.names[n]!r} at day {t}")
        if self.dates is not None and len(self.dates) != m.shape[1]:
            raise SeriesError("dates and panel columns differ in length")
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)

    @property
    def N(self) -> int:
        return self.matrix.shape[0]

    @property
    def T(self) -> int:
        return self.matrix.shape[1] - 1

    def normalized(self) -> np.ndarray:
        """Each row divided by its day-0 price."""
        return self.matrix / self.matrix[:, :1]

    def series(self, n: int) -> PriceSeries:
        return PriceSeries(self.matrix[n], label=self.names[n], dates=self.dates)


def build_index(panel: PricePanel, label: str = "index") -> PriceSeries:
    values = panel.normalized().mean(axis=0)
    values[0] = 1.0
    return PriceSeries(values, label=label, dates=panel.dates)


def leave_one_out_index(panel: PricePanel, n: int) -> PriceSeries:
    """Artificial index over every stock except row ``n``."""
    if not 0 <= n < panel.N:
        raise IndexError(f"stock id {n} out of range for a panel of {panel.N}")
    rel = panel.normalized()
    values = np.delete(rel, n, axis=0).mean(axis=0)
    values[0] = 1.0
    return PriceSeries(values, label=f"index-without-{panel.names[n]}", dates=panel.dates)
