"""Pieces shared by both bootstrap tests: replicate RNG streams, the
bootstrap-world recursion, p-values and the report container."""

from __future__ import annotations

from dataclasses import asdict, dataclass, field
from typing import Any

import numpy as np

from .errors import ConfigurationError, DimensionMismatch, ExplosiveRecursion
from .hegy import Hypothesis, SeasonalFit

EXPLOSION_BOUND = 1e12
PVALUE_RULES = ("smoothed", "paper_count")

# coefficients of (y[t-1], y[t-2], y[t-3], y[t-4]) in Y1..Y4 at time t-1
_CHANNEL_WEIGHTS = np.array(
    [
        [1.0, 1.0, 1.0, 1.0],
        [-1.0, 1.0, -1.0, 1.0],
        [0.0, -1.0, 0.0, 1.0],
        [-1.0, 0.0, 1.0, 0.0],
    ]
)


def replicate_rng(seed: int, r: int) -> np.random.Generator:
    """Independent stream for bootstrap replicate ``r`` under root ``seed``."""
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed, spawn_key=(r,))))


def null_imposed_pi(fit: SeasonalFit, hypothesis: Hypothesis | None) -> np.ndarray:
    pi = fit.pi.copy()
    if hypothesis is not None:
        for j in hypothesis.root_set:
            pi[:, j - 1] = 0.0
    return pi


def generate_recursive(
    pi: np.ndarray,
    phi: np.ndarray,
    driver: np.ndarray,
    initial=None,
    start_season: int = 1,
    use_pi: bool = True,
) -> np.ndarray:
    """Run the season-by-season HEGY recursion forward.

    Solves, for ``t >= w`` (``w`` = length of ``initial``, default 4 zeros),

        D_t = sum_j pi_{j,s} Y_{j,t-1} + sum_i phi_{i,s} D_{t-i} + driver_t,
        y_t = y_{t-4} + D_t,

    with ``D = (1 - L^4) y`` taken as zero wherever it would reach before
    the start of the series.  ``driver`` has shape ``(n - w,)`` or
    ``(B, n - w)``; the output matches with ``n`` columns.
    """
    driver = np.asarray(driver, dtype=np.float64)
    squeeze = driver.ndim == 1
    drv = np.atleast_2d(driver)
    B, n_gen = drv.shape
    initial = np.zeros(4) if initial is None else np.asarray(initial, dtype=np.float64).ravel()
    w = initial.size
    if w < 4:
        raise DimensionMismatch(f"need at least 4 initial values, got {w}")
    phi = np.asarray(phi, dtype=np.float64).reshape(4, -1)
    k = phi.shape[1]
    n = w + n_gen
    pad = k
    Y = np.zeros((B, n))
    Y[:, :w] = initial
    D = np.zeros((B, n + pad))  # D[:, t + pad] holds time t
    D[:, pad + 4 : pad + w] = Y[:, 4:w] - Y[:, : w - 4]
    # weights on y[t-4..t-1] (oldest first) for each season
    lin = (pi @ _CHANNEL_WEIGHTS)[:, ::-1] if use_pi else np.zeros((4, 4))
    ar = phi[:, ::-1]  # weights on D[t-k..t-1]
    season = (start_season - 1 + np.arange(n)) % 4
    any_ar = k > 0 and np.any(phi != 0)
    for t in range(w, n):
        s = season[t]
        acc = drv[:, t - w].copy()
        if use_pi:
            acc += Y[:, t - 4 : t] @ lin[s]
        if any_ar:
            acc += D[:, t + pad - k : t + pad] @ ar[s]
        D[:, t + pad] = acc
        Y[:, t] = Y[:, t - 4] + acc
    if not np.all(np.isfinite(Y)) or np.abs(Y).max(initial=0.0) > EXPLOSION_BOUND:
        raise ExplosiveRecursion(
            f"bootstrap recursion exceeded {EXPLOSION_BOUND:g}; coefficients are not causal"
        )
    return Y[0] if squeeze else Y


def demean_by_season(residuals: np.ndarray, season: np.ndarray) -> np.ndarray:
    out = np.array(residuals, dtype=np.float64)
    for s in np.unique(season):
        sel = season == s
        out[sel] -= out[sel].mean()
    return out


def bootstrap_pvalue(observed: float, boot: np.ndarray, tail: str, rule: str = "smoothed"):
    """p-value and the count of replicates at least as extreme as ``observed``.

    Ties count as extreme.  ``"smoothed"`` returns ``(1 + c) / (B + 1)``;
    ``"paper_count"`` returns ``c / B``.
    """
    boot = np.asarray(boot, dtype=np.float64)
    if tail == "left":
        c = int(np.sum(boot <= observed))
    elif tail == "right":
        c = int(np.sum(boot >= observed))
    else:
        raise ConfigurationError(f"unknown tail {tail!r}")
    B = boot.size
    if rule == "smoothed":
        return (1 + c) / (B + 1), c
    if rule == "paper_count":
        return c / B, c
    raise ConfigurationError(f"unknown p-value rule {rule!r}; use one of {PVALUE_RULES}")


def decide(p_value: float, level: float, rule: str) -> bool:
    # paper_count: reject when strictly more than B(1 - level) replicates are
    # less extreme than the observed statistic, i.e. c / B < level
    if rule == "paper_count":
        return p_value < level
    return p_value <= level


@dataclass
class TestReport:
    """Outcome of one bootstrap test."""

    __test__ = False  # keep pytest from collecting this class

    hypothesis: str
    method: str
    statistic: str
    tail: str
    observed_statistic: float
    bootstrap_statistics: np.ndarray
    p_value: float
    reject: bool
    level: float
    pvalue_rule: str
    config: dict
    diagnostics: dict = field(default_factory=dict)

    @property
    def B(self) -> int:
        return int(np.size(self.bootstrap_statistics))

    def to_dict(self) -> dict[str, Any]:
        d = asdict(self)
        d["bootstrap_statistics"] = [float(x) for x in self.bootstrap_statistics]
        d["observed_statistic"] = float(self.observed_statistic)
        d["p_value"] = float(self.p_value)
        d["reject"] = bool(self.reject)
        d["B"] = self.B
        return _plain(d)


def _plain(obj):
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_plain(v) for v in obj.tolist()]
    if isinstance(obj, np.generic):
        return obj.item()
    return obj
