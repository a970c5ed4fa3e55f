"""Price and log-return series plus the random-permutation (scrambling) surrogate."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

# Every permutation in the toolkit is drawn from numpy's PCG64 bit generator.
# Its output stream for a given seed is fixed across platforms and numpy versions.
SCRAMBLE_ALGORITHM = "numpy-PCG64/fisher-yates"


class SeriesError(ValueError):
    """Raised when a series violates its invariants."""


def _as_float_array(values) -> np.ndarray:
    arr = np.array(values, dtype=float)
    if arr.ndim != 1:
        raise SeriesError(f"expected a 1-d series, got shape {arr.shape}")
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class PriceSeries:
    """Closing prices on a uniform day grid, indices 0..T."""

    values: np.ndarray
    label: str = ""
    dates: tuple[str, ...] | None = field(default=None, compare=False)

    def __post_init__(self):
        arr = _as_float_array(self.values)
        object.__setattr__(self, "values", arr)
        if arr.size < 2:
            raise SeriesError("length >= 2 required")
        bad = np.flatnonzero(~(np.isfinite(arr) & (arr > 0)))
        if bad.size:
            i = int(bad[0])
            raise SeriesError(f"non-positive or non-finite price {arr[i]!r} at index {i}")
        if self.dates is not None and len(self.dates) != arr.size:
            raise SeriesError("dates and values differ in length")

    @property
    def T(self) -> int:
        return self.values.size - 1

    def __len__(self):
        return self.values.size


@dataclass(frozen=True, eq=False)
class ReturnSeries:
    """Log returns for days 1..T together with the day-0 price."""

    values: np.ndarray
    base_value: float

    def __post_init__(self):
        arr = _as_float_array(self.values)
        object.__setattr__(self, "values", arr)
        if not (np.isfinite(self.base_value) and self.base_value > 0):
            raise SeriesError(f"base value must be positive, got {self.base_value!r}")

    def __len__(self):
        return self.values.size


@dataclass(frozen=True)
class ScrambleSpec:
    seed: int
    algorithm: str = SCRAMBLE_ALGORITHM

    def __post_init__(self):
        if not 0 <= int(self.seed) < 2**64:
            raise SeriesError("seed must be an unsigned 64-bit integer")
        if self.algorithm != SCRAMBLE_ALGORITHM:
            raise SeriesError(f"unsupported algorithm {self.algorithm!r}")

    def permutation(self, n: int) -> np.ndarray:
        """Permutation of 0..n-1 by an explicit Fisher-Yates pass over PCG64 draws."""
        rng = np.random.Generator(np.random.PCG64(int(self.seed)))
        perm = np.arange(n)
        if n < 2:
            return perm
        # j_i uniform on 0..i, drawn for i = n-1 down to 1
        upper = np.arange(n - 1, 0, -1)
        draws = rng.integers(0, upper + 1)
        for i, j in zip(upper, draws):
            perm[i], perm[j] = perm[j], perm[i]
        return perm


def log_returns(prices: PriceSeries) -> ReturnSeries:
    v = prices.values
    return ReturnSeries(np.log(v[1:] / v[:-1]), float(v[0]))


def reconstruct(returns: ReturnSeries, label: str = "") -> PriceSeries:
    r = returns.values
    if not np.all(np.isfinite(r)):
        raise SeriesError("returns must be finite")
    path = np.empty(r.size + 1)
    path[0] = returns.base_value
    with np.errstate(over="ignore"):
        path[1:] = returns.base_value * np.exp(np.cumsum(r))
    if not np.all(np.isfinite(path)):
        raise SeriesError("reconstructed prices overflow")
    return PriceSeries(path, label=label)


def scramble_returns(prices: PriceSeries, spec: ScrambleSpec) -> ReturnSeries:
    """Permuted log returns; an exact rearrangement of ``log_returns(prices)``."""
    ret = log_returns(prices)
    return ReturnSeries(ret.values[spec.permutation(len(ret))], ret.base_value)


def scramble(prices: PriceSeries, spec: ScrambleSpec) -> PriceSeries:
    """Re-cumulate the log returns of ``prices`` in a seeded random order.

    The surrogate starts at the same price and, because the return sum is
    order-free, ends at the same price up to round-off.
    """
    shuffled = scramble_returns(prices, spec)
    label = f"{prices.label}:scrambled[{spec.seed}]" if prices.label else f"scrambled[{spec.seed}]"
    return reconstruct(shuffled, label=label)
