"""No-intercept OLS with t/F statistics, VIF and stepwise pruning.

Designs here are small (a handful of columns), so fits go through the
normal equations with a Cholesky factor and fall back to a pivoted QR
when ``X'X`` is badly conditioned.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field, replace
from typing import Iterable, Mapping, Sequence

import numpy as np
import scipy.linalg as sla

from .errors import (
    AllColumnsRemoved,
    ConfigurationError,
    DimensionMismatch,
    SingularDesign,
    ZeroResidualVariance,
    ZeroVariance,
)

logger = logging.getLogger(__name__)

__all__ = [
    "DesignMatrix",
    "RegressionFit",
    "ols_fit",
    "t_statistic",
    "f_statistic",
    "vif",
    "stepwise_vif_prune",
    "stepwise_t_prune",
]

RCOND_MIN = 1e-12
VIF_INF_TOL = 1e-12
# residual norm below 1e-12 ||y|| counts as an exact fit
EXACT_FIT_TOL = 1e-24


@dataclass(frozen=True)
class DesignMatrix:
    """Named regressor columns sharing one sample."""

    data: np.ndarray
    names: tuple[str, ...]
    removed: tuple[str, ...] = ()

    def __post_init__(self):
        data = np.array(self.data, dtype=np.float64)
        if data.ndim == 1:
            data = data[:, None]
        names = tuple(self.names)
        if data.ndim != 2 or data.shape[1] != len(names):
            raise DimensionMismatch(f"{len(names)} names for a design of shape {data.shape}")
        if len(set(names)) != len(names):
            raise DimensionMismatch("column names must be unique")
        data.setflags(write=False)
        object.__setattr__(self, "data", data)
        object.__setattr__(self, "names", names)

    @classmethod
    def from_columns(cls, columns: Mapping[str, Sequence[float]]) -> "DesignMatrix":
        names = tuple(columns)
        lengths = {len(columns[k]) for k in names}
        if len(lengths) > 1:
            raise DimensionMismatch(f"columns have differing lengths {sorted(lengths)}")
        return cls(np.column_stack([np.asarray(columns[k], float) for k in names]), names)

    @property
    def n(self) -> int:
        return self.data.shape[0]

    @property
    def p(self) -> int:
        return self.data.shape[1]

    def index(self, name: str) -> int:
        try:
            return self.names.index(name)
        except ValueError:
            raise KeyError(f"no column named {name!r}") from None

    def column(self, name: str) -> np.ndarray:
        return self.data[:, self.index(name)]

    def zero_columns(self) -> list[str]:
        return [nm for nm, c in zip(self.names, self.data.T) if not np.any(c)]

    def drop(self, names: Iterable[str]) -> "DesignMatrix":
        drop = set(names)
        keep = [i for i, nm in enumerate(self.names) if nm not in drop]
        return DesignMatrix(
            self.data[:, keep],
            tuple(self.names[i] for i in keep),
            self.removed + tuple(nm for nm in self.names if nm in drop),
        )


@dataclass(frozen=True)
class RegressionFit:
    coefficients: dict
    residuals: np.ndarray
    sigma2: float
    coef_cov: np.ndarray
    rss: float
    retained: tuple[str, ...]
    n: int
    removal_log: tuple = field(default=())

    @property
    def df_resid(self) -> int:
        return self.n - len(self.retained)

    def coef_array(self) -> np.ndarray:
        return np.array([self.coefficients[k] for k in self.retained])


def _solve_normal(X: np.ndarray, y: np.ndarray):
    """Coefficients and ``(X'X)^-1``, Cholesky first and pivoted QR as fallback."""
    xtx = X.T @ X
    xty = X.T @ y
    scale = np.sqrt(np.diag(xtx))
    if np.all(scale > 0):
        # equilibrate so the conditioning check sees collinearity, not units
        s = 1.0 / scale
        try:
            cf = sla.cho_factor(xtx * np.outer(s, s), lower=False, check_finite=False)
            d = np.abs(np.diag(cf[0]))
            if (d.min() / d.max()) ** 2 > RCOND_MIN:
                beta = s * sla.cho_solve(cf, s * xty, check_finite=False)
                inv = sla.cho_solve(cf, np.eye(xtx.shape[0]), check_finite=False)
                return beta, inv * np.outer(s, s)
        except np.linalg.LinAlgError:
            pass
    q, r, piv = sla.qr(X, mode="economic", pivoting=True)
    d = np.abs(np.diag(r))
    if d.size == 0 or d[0] == 0 or (d[-1] / d[0]) ** 2 <= RCOND_MIN:
        raise SingularDesign("design matrix is rank deficient or numerically singular")
    beta_p = sla.solve_triangular(r, q.T @ y)
    rinv = sla.solve_triangular(r, np.eye(r.shape[0]))
    inv_p = rinv @ rinv.T
    beta = np.empty_like(beta_p)
    beta[piv] = beta_p
    xtx_inv = np.empty_like(inv_p)
    xtx_inv[np.ix_(piv, piv)] = inv_p
    return beta, xtx_inv


def ols_fit(X: DesignMatrix, y) -> RegressionFit:
    """Least-squares fit of ``y`` on the columns of ``X`` (no intercept)."""
    y = np.asarray(y, dtype=np.float64).ravel()
    if y.size != X.n:
        raise DimensionMismatch(f"y has {y.size} rows, design has {X.n}")
    if X.p == 0:
        raise AllColumnsRemoved("cannot fit an empty design")
    if X.n <= X.p:
        raise DimensionMismatch(f"need more observations ({X.n}) than columns ({X.p})")
    beta, xtx_inv = _solve_normal(X.data, y)
    resid = y - X.data @ beta
    rss = float(resid @ resid)
    if rss <= EXACT_FIT_TOL * float(y @ y):
        resid = np.zeros_like(resid)
        rss = 0.0
    sigma2 = rss / (X.n - X.p)
    cov = sigma2 * xtx_inv
    cov = 0.5 * (cov + cov.T)
    return RegressionFit(
        coefficients=dict(zip(X.names, beta.tolist())),
        residuals=resid,
        sigma2=sigma2,
        coef_cov=cov,
        rss=rss,
        retained=X.names,
        n=X.n,
    )


def t_statistic(fit: RegressionFit, name: str) -> float:
    if name not in fit.retained:
        raise KeyError(f"{name!r} is not a retained column")
    i = fit.retained.index(name)
    var = fit.coef_cov[i, i]
    if not var > 0:
        raise ZeroVariance(f"coefficient variance of {name!r} is zero")
    return fit.coefficients[name] / np.sqrt(var)


def f_statistic(fit_unrestricted: RegressionFit, X: DesignMatrix, y, restricted_names) -> float:
    """F statistic for the joint restriction that the named coefficients are zero.

    The restricted model is refit on ``X`` without those columns.
    """
    restricted = set(restricted_names)
    if not restricted:
        raise ConfigurationError("need at least one restricted column")
    missing = restricted - set(fit_unrestricted.retained)
    if missing:
        raise KeyError(f"columns {sorted(missing)} are not retained")
    if fit_unrestricted.rss == 0:
        raise ZeroResidualVariance("unrestricted residual sum of squares is zero")
    y = np.asarray(y, dtype=np.float64)
    Xu = X.drop(set(X.names) - set(fit_unrestricted.retained))
    Xr = Xu.drop(restricted)
    if Xr.p == 0:
        rss_r = float(y @ y)
    else:
        rss_r = ols_fit(Xr, y).rss
    q = len(restricted)
    F = ((rss_r - fit_unrestricted.rss) / q) / fit_unrestricted.sigma2
    return max(F, 0.0)


def vif(X: DesignMatrix, name: str) -> float:
    """Variance inflation factor from the uncentred R^2 of column ``name`` on the rest."""
    if X.p < 2:
        raise ConfigurationError("VIF needs at least two columns")
    j = X.index(name)
    xj = X.data[:, j]
    others = np.delete(X.data, j, axis=1)
    tss = float(xj @ xj)
    if tss == 0:
        return np.inf
    coef, *_ = np.linalg.lstsq(others, xj, rcond=None)
    resid = xj - others @ coef
    r2 = 1.0 - float(resid @ resid) / tss
    if r2 >= 1.0 - VIF_INF_TOL:
        return np.inf
    return 1.0 / (1.0 - r2)


def stepwise_vif_prune(X: DesignMatrix, threshold: float, protected: Iterable[str] = ()) -> DesignMatrix:
    """Repeatedly drop the column with the largest VIF while it exceeds ``threshold``.

    Ties within 1e-12 go to the larger column index.  Columns in
    ``protected`` are never dropped; when one of them holds the maximum, the
    largest VIF among the unprotected columns is used instead.  The removal
    order is kept in ``DesignMatrix.removed``.
    """
    if not threshold > 1:
        raise ConfigurationError(f"VIF threshold must exceed 1, got {threshold}")
    if X.p == 0:
        raise AllColumnsRemoved("cannot prune an empty design")
    protected = set(protected)
    current = X
    while current.p >= 2:
        vifs = np.array([vif(current, nm) for nm in current.names])
        cand = [i for i, nm in enumerate(current.names) if nm not in protected]
        if not cand:
            break
        vals = vifs[cand]
        top = vals.max()
        if not top > threshold:
            break
        if np.isinf(top):
            ties = [c for c, v in zip(cand, vals) if np.isinf(v)]
        else:
            ties = [c for c, v in zip(cand, vals) if v >= top - VIF_INF_TOL]
        current = current.drop([current.names[max(ties)]])
    return current


def stepwise_t_prune(X: DesignMatrix, y, candidate_names: Iterable[str], t_threshold: float) -> RegressionFit:
    """Backward elimination of candidate columns with ``|t| < t_threshold``.

    Only ``candidate_names`` are eligible.  A candidate whose t statistic
    cannot be evaluated (zero variance) is kept.  The returned fit carries a
    ``removal_log`` of ``(name, t)`` pairs, plus ``(name, None)`` entries for
    candidates that were kept because of zero variance.
    """
    candidates = [nm for nm in X.names if nm in set(candidate_names)]
    unknown = set(candidate_names) - set(X.names)
    if unknown:
        raise KeyError(f"unknown candidate columns {sorted(unknown)}")
    log = []
    current = X
    while True:
        fit = ols_fit(current, y)
        tvals = {}
        for nm in candidates:
            try:
                tvals[nm] = abs(t_statistic(fit, nm))
            except ZeroVariance:
                if (nm, None) not in log:
                    log.append((nm, None))
                    logger.debug("kept %s: zero coefficient variance", nm)
        if not tvals:
            break
        worst = min(tvals, key=lambda k: (tvals[k], -current.index(k)))
        if tvals[worst] >= t_threshold:
            break
        if current.p == 1:
            break
        log.append((worst, tvals[worst]))
        candidates.remove(worst)
        current = current.drop([worst])
    return replace(fit, removal_log=tuple(log))
