"""Pooled and season-by-season HEGY regressions.

The pooled regression is

    (1 - L^4) y_t = sum_j pi_j Y_{j,t-1} + sum_i phi_i (1 - L^4) y_{t-i} + e_t

over the window ``t = k + 4 .. n - 1`` (0-based), so every lag exists.  The
unaugmented variant is the same regression with ``k = 0``.

Pooled statistics are computed by a batched kernel that works on a stack of
series at once; the bootstrap procedures re-test whole batches of
replicates through it.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from functools import cached_property
from typing import Iterable

import numpy as np

from . import linreg
from .core_series import QuarterlySeries, seasons
from .errors import (
    ConfigurationError,
    DataError,
    SeriesTooShort,
    SingularDesign,
    ZeroResidualVariance,
)

__all__ = [
    "Hypothesis",
    "HYPOTHESES",
    "HegyStatistics",
    "SeasonalFit",
    "DecisionRule",
    "F_SETS",
    "K_MAX_DEFAULT",
    "VIF_THRESHOLD",
    "T_THRESHOLD",
    "hegy_design",
    "augmented_hegy",
    "unaugmented_hegy",
    "batch_hegy",
    "seasonal_regression",
    "truncate_pi",
    "null_directions",
]

K_MAX_DEFAULT = 4
VIF_THRESHOLD = 10.0
T_THRESHOLD = 1.65

PI_NAMES = ("pi1", "pi2", "pi3", "pi4")
F_SETS = ((1, 2), (3, 4), (1, 3, 4), (2, 3, 4), (1, 2, 3, 4))


def lag_names(k: int) -> tuple[str, ...]:
    return tuple(f"lag{i}" for i in range(1, k + 1))


@dataclass(frozen=True)
class Hypothesis:
    """Set of HEGY indices whose coefficients are zero under the null."""

    root_set: frozenset

    def __post_init__(self):
        rs = frozenset(int(j) for j in self.root_set)
        if rs not in _VALID_SETS:
            raise ConfigurationError(
                f"unsupported root set {sorted(rs)}; choose one of "
                + ", ".join(str(sorted(s)) for s in _VALID_SETS)
            )
        object.__setattr__(self, "root_set", rs)

    @classmethod
    def parse(cls, text) -> "Hypothesis":
        """Accept ``"1"``, ``"34"``, ``"1,3,4"``, ``"{2,3,4}"`` or an iterable of ints."""
        if isinstance(text, Hypothesis):
            return text
        if isinstance(text, (int, np.integer)):
            text = str(text)
        if isinstance(text, str):
            digits = [c for c in text if c.isdigit()]
            if not digits or any(c not in "1234" for c in digits):
                raise ConfigurationError(f"cannot parse hypothesis {text!r}")
            return cls(frozenset(int(c) for c in digits))
        return cls(frozenset(text))

    @property
    def indices(self) -> tuple[int, ...]:
        return tuple(sorted(self.root_set))

    @property
    def is_single(self) -> bool:
        return len(self.root_set) == 1

    @property
    def label(self) -> str:
        return "".join(str(j) for j in self.indices)

    def __str__(self) -> str:
        return "{" + ",".join(str(j) for j in self.indices) + "}"


_VALID_SETS = [frozenset(s) for s in ((1,), (2,), (1, 2), (3, 4), (1, 3, 4), (2, 3, 4), (1, 2, 3, 4))]
HYPOTHESES = tuple(Hypothesis(s) for s in _VALID_SETS)


@dataclass(frozen=True)
class HegyStatistics:
    pi_hat: np.ndarray
    t: np.ndarray
    F: dict
    k_used: int
    retained_lags: tuple[int, ...]
    n_obs: int

    def statistic(self, name: str) -> float:
        """Look up ``"t1"``, ``"pi2"``, ``"F34"`` and so on."""
        if name.startswith("pi"):
            return float(self.pi_hat[int(name[2]) - 1])
        if name.startswith("t"):
            return float(self.t[int(name[1]) - 1])
        if name.startswith("F"):
            return float(self.F[tuple(int(c) for c in name[1:])])
        raise KeyError(name)


@dataclass(frozen=True)
class DecisionRule:
    statistic: str
    tail: str

    def __post_init__(self):
        if self.tail not in ("left", "right"):
            raise ConfigurationError(f"tail must be 'left' or 'right', got {self.tail!r}")


def null_directions(h: Hypothesis, statistic_choice: str = "t") -> DecisionRule:
    """Which statistic and which tail reject ``h``.

    Single roots reject for small ``t_j`` (or small ``pi_j`` when
    ``statistic_choice="pi"``); joint hypotheses reject for large F.
    """
    h = Hypothesis.parse(h)
    if h.is_single:
        if statistic_choice not in ("t", "pi"):
            raise ConfigurationError(f"statistic_choice must be 't' or 'pi', got {statistic_choice!r}")
        return DecisionRule(f"{statistic_choice}{h.indices[0]}", "left")
    return DecisionRule("F" + h.label, "right")


# --------------------------------------------------------------------------
# design construction


def _hegy_channels(v: np.ndarray):
    y0, y1, y2, y3 = v[..., 3:], v[..., 2:-1], v[..., 1:-2], v[..., :-3]
    return (
        y0 + y1 + y2 + y3,
        -(y0 - y1 + y2 - y3),
        -(y1 - y3),
        -(y0 - y2),
    )


def hegy_design(values: np.ndarray, k: int):
    """Dependent variable and regressors of the HEGY regression.

    ``values`` may carry leading batch axes.  Returns ``(dy, X)`` with
    ``dy[..., r]`` the seasonal difference at time ``t = k + 4 + r`` and
    ``X[..., r, :]`` holding ``Y1..Y4`` at ``t - 1`` then the ``k`` lagged
    seasonal differences.
    """
    v = np.asarray(values, dtype=np.float64)
    n = v.shape[-1]
    if k < 0:
        raise ConfigurationError(f"lag order must be >= 0, got {k}")
    m = n - 4 - k
    if m < 1:
        raise SeriesTooShort(f"{n} observations leave no regression sample with k={k}")
    d = v[..., 4:] - v[..., :-4]  # d[..., i] is time i + 4
    chans = _hegy_channels(v)  # index i is time i + 3
    cols = [c[..., k : k + m] for c in chans]
    cols += [d[..., k - i : k - i + m] for i in range(1, k + 1)]
    X = np.stack(cols, axis=-1)
    return d[..., k:], X


# --------------------------------------------------------------------------
# batched pooled regression


def _masked_fit(X, y, XtX, Xty, active):
    """OLS on the active columns of every design in the batch.

    Inactive columns get a zero coefficient.  Returns
    ``(beta, var, rss, sigma2)`` with ``var`` the coefficient variances.
    """
    B, m, p = X.shape
    both = active[:, :, None] & active[:, None, :]
    A = np.where(both, XtX, 0.0)
    idx = np.arange(p)
    A[:, idx, idx] = np.where(active, A[:, idx, idx], 1.0)
    c = np.where(active, Xty, 0.0)
    d = np.sqrt(A[:, idx, idx])
    if np.any(d == 0):
        raise SingularDesign("a HEGY regressor is identically zero")
    s = 1.0 / d
    As = A * s[:, :, None] * s[:, None, :]
    try:
        inv = np.linalg.inv(As)
    except np.linalg.LinAlgError:
        raise SingularDesign("a HEGY design in the batch is singular") from None
    # guard against near-singular stacks that inv() does not flag
    if not np.all(np.isfinite(inv)) or np.any(np.einsum("bii->bi", inv) > 1e12):
        raise SingularDesign("a HEGY design in the batch is numerically singular")
    inv = inv * s[:, :, None] * s[:, None, :]
    beta = np.einsum("bij,bj->bi", inv, c)
    beta = np.where(active, beta, 0.0)
    resid = y - (X @ beta[:, :, None])[:, :, 0]
    rss = np.einsum("bm,bm->b", resid, resid)
    df = m - active.sum(axis=1)
    sigma2 = rss / df
    var = sigma2[:, None] * inv[:, idx, idx]
    return beta, var, rss, sigma2


@dataclass(frozen=True)
class BatchStatistics:
    """Statistics for a stack of series; leading axis indexes the series."""

    pi_hat: np.ndarray
    t: np.ndarray
    F: dict
    lag_active: np.ndarray
    n_obs: int

    def statistic(self, name: str) -> np.ndarray:
        if name.startswith("pi"):
            return self.pi_hat[:, int(name[2]) - 1]
        if name.startswith("t"):
            return self.t[:, int(name[1]) - 1]
        if name.startswith("F"):
            return self.F[tuple(int(c) for c in name[1:])]
        raise KeyError(name)

    def item(self, b: int) -> HegyStatistics:
        lags = tuple(int(i) + 1 for i in np.flatnonzero(self.lag_active[b]))
        return HegyStatistics(
            pi_hat=self.pi_hat[b].copy(),
            t=self.t[b].copy(),
            F={key: float(val[b]) for key, val in self.F.items()},
            k_used=max(lags) if lags else 0,
            retained_lags=lags,
            n_obs=self.n_obs,
        )


def batch_hegy(
    values,
    k: int,
    prune: bool = False,
    t_threshold: float = T_THRESHOLD,
    f_sets: Iterable[tuple[int, ...]] = F_SETS,
) -> BatchStatistics:
    """HEGY statistics for every row of ``values`` (shape ``(B, n)``).

    With ``prune`` the lag columns are eliminated backwards while the
    smallest ``|t|`` among them is below ``t_threshold``; the sample window
    stays the one implied by ``k``.
    """
    values = np.atleast_2d(np.asarray(values, dtype=np.float64))
    y, X = hegy_design(values, k)
    B, m, p = X.shape
    Xt = X.transpose(0, 2, 1)
    XtX = Xt @ X
    Xty = (Xt @ y[:, :, None])[:, :, 0]
    active = np.ones((B, p), dtype=bool)
    while True:
        beta, var, rss, sigma2 = _masked_fit(X, y, XtX, Xty, active)
        if not prune or k == 0:
            break
        with np.errstate(divide="ignore", invalid="ignore"):
            tabs = np.abs(beta[:, 4:]) / np.sqrt(var[:, 4:])
        # inactive lags and unevaluable ones (zero variance) are never removed
        tabs = np.where(active[:, 4:] & (var[:, 4:] > 0), tabs, np.inf)
        # ties go to the larger lag index
        rev = np.argmin(tabs[:, ::-1], axis=1)
        worst = k - 1 - rev
        low = tabs[np.arange(B), worst] < t_threshold
        if not low.any():
            break
        active[np.flatnonzero(low), 4 + worst[low]] = False
    if np.any(rss <= linreg.EXACT_FIT_TOL * np.einsum("bm,bm->b", y, y)):
        raise ZeroResidualVariance("HEGY regression fits exactly; statistics are undefined")
    with np.errstate(divide="ignore", invalid="ignore"):
        t = beta[:, :4] / np.sqrt(var[:, :4])
    F = {}
    for A in f_sets:
        A = tuple(A)
        restricted = active.copy()
        restricted[:, [j - 1 for j in A]] = False
        _, _, rss_r, _ = _masked_fit(X, y, XtX, Xty, restricted)
        F[A] = np.maximum((rss_r - rss) / len(A) / sigma2, 0.0)
    return BatchStatistics(
        pi_hat=beta[:, :4].copy(),
        t=t,
        F=F,
        lag_active=active[:, 4:].copy(),
        n_obs=m,
    )


def _check_series(y: QuarterlySeries, min_length: int):
    if not isinstance(y, QuarterlySeries):
        y = QuarterlySeries(y)
    if y.length % 4:
        raise DataError(f"HEGY tests need a whole number of years; got {y.length} observations")
    if y.length < min_length:
        raise SeriesTooShort(f"need at least {min_length} observations, got {y.length}")
    return y


def augmented_hegy(y: QuarterlySeries, k: int = K_MAX_DEFAULT, prune: bool = True,
                   t_threshold: float = T_THRESHOLD) -> HegyStatistics:
    """Pooled HEGY regression augmented with ``k`` lagged seasonal differences."""
    y = _check_series(y, 4 * (k + 6))
    return batch_hegy(y.values[None, :], k, prune=prune, t_threshold=t_threshold).item(0)


def unaugmented_hegy(y: QuarterlySeries) -> HegyStatistics:
    """Pooled HEGY regression on the four channels only."""
    y = _check_series(y, 24)
    return batch_hegy(y.values[None, :], 0).item(0)


# --------------------------------------------------------------------------
# season-by-season regression


@dataclass(frozen=True)
class SeasonalFit:
    """Season-by-season HEGY fit.

    ``pi`` is indexed ``[season - 1, j - 1]`` and ``phi`` ``[season - 1, i - 1]``.
    ``residuals`` is the time-ordered residual sequence over the regression
    window, which starts at 0-based time ``window_start``; ``season`` labels
    each residual.
    """

    pi: np.ndarray
    phi: np.ndarray
    residuals: np.ndarray
    season: np.ndarray
    window_start: int
    k: int
    augmented: bool
    retained: tuple
    removal_log: tuple
    truncation_events: int = 0

    @cached_property
    def residuals_by_season(self) -> dict:
        return {s: self.residuals[self.season == s] for s in (1, 2, 3, 4)}

    @property
    def sample_sizes(self) -> dict:
        return {s: int(np.sum(self.season == s)) for s in (1, 2, 3, 4)}


def seasonal_regression(
    y: QuarterlySeries,
    k: int = K_MAX_DEFAULT,
    augmented: bool = True,
    vif_threshold: float = VIF_THRESHOLD,
    t_threshold: float = T_THRESHOLD,
    protect: Iterable[str] = (),
) -> SeasonalFit:
    """Fit the HEGY regression separately for every season.

    Within each season the VIF pruner runs first (skipped when
    ``vif_threshold`` is infinite), then backward elimination of lag
    columns at ``t_threshold`` (skipped when it is 0).  Columns named in
    ``protect`` survive VIF pruning.  Dropped columns get coefficient 0.
    """
    if not isinstance(y, QuarterlySeries):
        y = QuarterlySeries(y)
    k = k if augmented else 0
    n_names = 4 + k
    if y.length % 4:
        raise DataError(f"need a whole number of years; got {y.length} observations")
    dy, X = hegy_design(y.values, k)
    start = k + 4
    season = seasons(y.length, y.start_season)[start:]
    names = PI_NAMES + lag_names(k)
    pi = np.zeros((4, 4))
    phi = np.zeros((4, k))
    resid = np.empty_like(dy)
    retained, log = [], []
    for s in (1, 2, 3, 4):
        rows = season == s
        if rows.sum() <= n_names + 1:
            raise SeriesTooShort(
                f"season {s} has {rows.sum()} observations for {n_names} regressors"
            )
        design = linreg.DesignMatrix(X[rows], names)
        if np.isfinite(vif_threshold) and design.p >= 2:
            try:
                design = linreg.stepwise_vif_prune(design, vif_threshold, protected=protect)
            except linreg.AllColumnsRemoved as exc:
                raise ConfigurationError(f"season {s}: {exc}") from exc
        lags = [nm for nm in design.names if nm.startswith("lag")]
        if lags and t_threshold > 0:
            fit = linreg.stepwise_t_prune(design, dy[rows], lags, t_threshold)
        else:
            fit = linreg.ols_fit(design, dy[rows])
        for j, nm in enumerate(PI_NAMES):
            pi[s - 1, j] = fit.coefficients.get(nm, 0.0)
        for i, nm in enumerate(lag_names(k)):
            phi[s - 1, i] = fit.coefficients.get(nm, 0.0)
        beta = np.array([fit.coefficients.get(nm, 0.0) for nm in names])
        resid[rows] = dy[rows] - X[rows] @ beta
        retained.append(fit.retained)
        log.append({"vif_removed": design.removed, "t_removed": fit.removal_log})
    return SeasonalFit(
        pi=pi,
        phi=phi,
        residuals=resid,
        season=season,
        window_start=start,
        k=k,
        augmented=augmented,
        retained=tuple(retained),
        removal_log=tuple(log),
    )


def truncate_pi(fit: SeasonalFit) -> SeasonalFit:
    """Clip ``pi_{j,s}`` at zero from above for j = 1, 2, 3; ``pi_4`` is left alone."""
    pi = fit.pi.copy()
    events = int(np.sum(pi[:, :3] > 0))
    pi[:, :3] = np.minimum(pi[:, :3], 0.0)
    return replace(fit, pi=pi, truncation_events=fit.truncation_events + events)
