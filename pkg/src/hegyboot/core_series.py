"""Quarterly series container and the lag-filter algebra used by the tests.

Seasons are numbered 1..4.  Observation ``i`` (0-based) of a series whose
first value falls in ``start_season`` belongs to season
``(start_season - 1 + i) % 4 + 1``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.signal import lfilter, lfiltic

from .errors import DataError, DimensionMismatch, SeriesTooShort

__all__ = [
    "QuarterlySeries",
    "LagPolynomial",
    "seasonal_difference",
    "hegy_transform",
    "multiply_polynomials",
    "ar_recursion",
    "seasons",
]


def _frozen(values) -> np.ndarray:
    arr = np.array(values, dtype=np.float64).ravel()
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class QuarterlySeries:
    """Immutable real-valued quarterly series.

    Parameters
    ----------
    values : array_like
        Observations, oldest first.  Must be finite.
    start_season : int
        Season (1..4) of the first observation.
    """

    values: np.ndarray
    start_season: int = 1

    def __post_init__(self):
        arr = _frozen(self.values)
        if arr.size < 1:
            raise DataError("a series needs at least one observation")
        if not np.all(np.isfinite(arr)):
            raise DataError("series contains non-finite values")
        if self.start_season not in (1, 2, 3, 4):
            raise DataError(f"start_season must be in 1..4, got {self.start_season}")
        object.__setattr__(self, "values", arr)

    def __len__(self) -> int:
        return self.values.size

    @property
    def length(self) -> int:
        return self.values.size

    def season_of(self, t: int) -> int:
        """Season of the 1-based observation index ``t``."""
        return (self.start_season - 1 + t - 1) % 4 + 1

    @property
    def season_index(self) -> np.ndarray:
        """Season (1..4) of every observation."""
        return seasons(self.length, self.start_season)

    def tail(self, start: int) -> "QuarterlySeries":
        """Drop the first ``start`` observations, keeping season bookkeeping."""
        return QuarterlySeries(self.values[start:], (self.start_season - 1 + start) % 4 + 1)


def seasons(n: int, start_season: int = 1) -> np.ndarray:
    return (start_season - 1 + np.arange(n)) % 4 + 1


@dataclass(frozen=True)
class LagPolynomial:
    """Polynomial ``c0 + c1 L + ... + cp L^p`` in the lag operator."""

    coefficients: np.ndarray = field()

    def __post_init__(self):
        arr = _frozen(self.coefficients)
        if arr.size == 0:
            raise DimensionMismatch("a lag polynomial needs at least one coefficient")
        object.__setattr__(self, "coefficients", arr)

    @property
    def degree(self) -> int:
        return self.coefficients.size - 1

    def __mul__(self, other: "LagPolynomial") -> "LagPolynomial":
        return multiply_polynomials(self, other)

    def apply(self, x) -> np.ndarray:
        """Filter ``x``; the first ``degree`` outputs are dropped."""
        x = np.asarray(x, dtype=np.float64)
        p = self.degree
        if x.size <= p:
            raise SeriesTooShort(f"need more than {p} observations to apply a degree-{p} filter")
        out = np.zeros(x.size - p)
        for i, c in enumerate(self.coefficients):
            out += c * x[p - i : x.size - i]
        return out


def multiply_polynomials(a: LagPolynomial, b: LagPolynomial) -> LagPolynomial:
    return LagPolynomial(np.convolve(a.coefficients, b.coefficients))


def seasonal_difference(y: QuarterlySeries) -> QuarterlySeries:
    """``(1 - L^4) y``; the result starts at the season of observation 5."""
    if y.length < 5:
        raise SeriesTooShort(f"seasonal differencing needs at least 5 observations, got {y.length}")
    v = y.values
    return QuarterlySeries(v[4:] - v[:-4], y.season_of(5))


def _hegy_arrays(v: np.ndarray):
    # rows t >= 3 (0-based); every output shares that window
    y0, y1, y2, y3 = v[3:], v[2:-1], v[1:-2], v[:-3]
    Y1 = y0 + y1 + y2 + y3
    Y2 = -(y0 - y1 + y2 - y3)
    Y3 = -(y1 - y3)
    Y4 = -(y0 - y2)
    return Y1, Y2, Y3, Y4


def hegy_transform(y: QuarterlySeries):
    """The four HEGY channels of ``y``.

    Returns ``(Y1, Y2, Y3, Y4)`` as series aligned on observation 4 onward:

    * ``Y1 = (1 + L)(1 + L^2) y``
    * ``Y2 = -(1 - L)(1 + L^2) y``
    * ``Y3 = -L (1 - L^2) y``
    * ``Y4 = -(1 - L^2) y``
    """
    if y.length < 4:
        raise SeriesTooShort(f"the HEGY transform needs at least 4 observations, got {y.length}")
    start = y.season_of(4)
    return tuple(QuarterlySeries(a, start) for a in _hegy_arrays(y.values))


def ar_recursion(filter: LagPolynomial, driver, initial) -> np.ndarray:
    """Solve ``filter(L) y_t = driver_t`` forward in time.

    ``initial`` supplies the ``degree`` values preceding ``driver[0]``, oldest
    first.  Only the newly generated values are returned.
    """
    c = filter.coefficients
    p = filter.degree
    if c[0] != 1.0:
        raise DimensionMismatch("ar_recursion expects a monic filter (c0 == 1)")
    initial = np.asarray(initial, dtype=np.float64).ravel()
    if initial.size != p:
        raise DimensionMismatch(f"need {p} initial values, got {initial.size}")
    driver = np.asarray(driver, dtype=np.float64).ravel()
    if p == 0:
        return driver.copy()
    # lfilter wants the pre-sample state in its own direct-form layout
    zi = lfiltic([1.0], c, y=initial[::-1])
    out, _ = lfilter([1.0], c, driver, zi=zi)
    return out
