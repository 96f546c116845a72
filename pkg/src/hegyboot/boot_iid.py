"""Seasonal iid bootstrap for the augmented HEGY test.

Residuals from the season-by-season augmented regression are demeaned and
resampled with replacement inside their own season, re-coloured through
the fitted season-specific recursion with the null imposed, and the
pooled augmented HEGY statistic is recomputed on every replicate.
"""

from __future__ import annotations

import logging
from dataclasses import asdict, dataclass, replace

import numpy as np

from .core_series import QuarterlySeries
from .errors import ConfigurationError, DataError, EmptyPool
from .hegy import (
    K_MAX_DEFAULT,
    PI_NAMES,
    T_THRESHOLD,
    VIF_THRESHOLD,
    Hypothesis,
    SeasonalFit,
    augmented_hegy,
    batch_hegy,
    null_directions,
    seasonal_regression,
    truncate_pi,
)
from .resampling import (
    PVALUE_RULES,
    TestReport,
    bootstrap_pvalue,
    decide,
    demean_by_season,
    generate_recursive,
    null_imposed_pi,
    replicate_rng,
)

logger = logging.getLogger(__name__)

__all__ = [
    "IidBootConfig",
    "demean_residuals_by_season",
    "resample_seasonal_iid",
    "generate_bootstrap_series",
    "iid_bootstrap_test",
]

CHUNK = 256


@dataclass(frozen=True)
class IidBootConfig:
    B: int = 500
    k_max: int = K_MAX_DEFAULT
    level: float = 0.05
    seed: int = 0
    use_reduced_recursion_for_single_roots: bool = True
    pvalue_rule: str = "smoothed"
    vif_threshold: float = VIF_THRESHOLD
    t_threshold: float = T_THRESHOLD

    def __post_init__(self):
        if self.B < 1:
            raise ConfigurationError(f"B must be >= 1, got {self.B}")
        if not 0 < self.level < 1:
            raise ConfigurationError(f"level must lie in (0, 1), got {self.level}")
        if self.k_max < 0:
            raise ConfigurationError(f"k_max must be >= 0, got {self.k_max}")
        if self.pvalue_rule not in PVALUE_RULES:
            raise ConfigurationError(f"pvalue_rule must be one of {PVALUE_RULES}")


def demean_residuals_by_season(fit: SeasonalFit) -> SeasonalFit:
    return replace(fit, residuals=demean_by_season(fit.residuals, fit.season))


def _pools(fit: SeasonalFit):
    pools = fit.residuals_by_season
    for s, pool in pools.items():
        if pool.size == 0:
            raise EmptyPool(f"season {s} has no residuals to resample")
    return pools


def resample_seasonal_iid(fit: SeasonalFit, rng, n: int, start_season: int = 1,
                          return_indices: bool = False):
    """Draw ``n`` innovations, each from the residual pool of its own season.

    The first draw belongs to ``start_season``.  With ``return_indices`` the
    positions within each season's pool are returned as well.
    """
    pools = _pools(fit)
    season = (start_season - 1 + np.arange(n)) % 4 + 1
    sizes = np.array([pools[s].size for s in (1, 2, 3, 4)])
    u = rng.random(n)
    pos = np.minimum((u * sizes[season - 1]).astype(np.int64), sizes[season - 1] - 1)
    flat = np.concatenate([pools[s] for s in (1, 2, 3, 4)])
    offset = np.concatenate([[0], np.cumsum(sizes)[:-1]])
    eps = flat[offset[season - 1] + pos]
    if return_indices:
        return eps, pos
    return eps


def generate_bootstrap_series(
    fit: SeasonalFit,
    eps_star,
    k: int | None = None,
    hypothesis: Hypothesis | None = None,
    reduced: bool = False,
    initial=None,
    start_season: int = 1,
) -> np.ndarray:
    """Bootstrap-world series driven by ``eps_star``.

    Coefficients for ``hypothesis.root_set`` are set to zero before
    generation (``hypothesis=None`` leaves the fit as is).  ``reduced``
    drops the HEGY channel terms altogether and keeps only the lag
    recursion in the seasonal differences.  ``initial`` defaults to four
    zeros, so the output has ``4 + len(eps_star)`` observations.
    """
    phi = fit.phi if k is None else fit.phi[:, :k]
    pi = null_imposed_pi(fit, hypothesis)
    return generate_recursive(pi, phi, eps_star, initial=initial,
                              start_season=start_season, use_pi=not reduced)


def iid_bootstrap_test(y: QuarterlySeries, h, cfg: IidBootConfig = IidBootConfig()) -> TestReport:
    """Seasonal iid bootstrap augmented HEGY test of ``h`` on ``y``."""
    if not isinstance(y, QuarterlySeries):
        y = QuarterlySeries(y)
    if y.length % 4:
        raise DataError(f"need a whole number of years; got {y.length} observations")
    h = Hypothesis.parse(h)
    rule = null_directions(h, "t")
    observed = augmented_hegy(y, cfg.k_max, prune=True, t_threshold=cfg.t_threshold)
    obs_value = observed.statistic(rule.statistic)

    protect = [PI_NAMES[j - 1] for j in h.indices]
    fit = seasonal_regression(y, cfg.k_max, augmented=True, vif_threshold=cfg.vif_threshold,
                              t_threshold=cfg.t_threshold, protect=protect)
    fit = demean_residuals_by_season(fit)
    gen_fit = truncate_pi(fit)
    reduced = cfg.use_reduced_recursion_for_single_roots and h.is_single
    pi_used = null_imposed_pi(gen_fit, h)

    n_gen = y.length - 4
    stats = np.empty(cfg.B)
    f_sets = [] if h.is_single else [h.indices]
    for lo in range(0, cfg.B, CHUNK):
        hi = min(lo + CHUNK, cfg.B)
        eps = np.stack([resample_seasonal_iid(fit, replicate_rng(cfg.seed, r), n_gen,
                                              y.season_of(5)) for r in range(lo, hi)])
        ystar = generate_bootstrap_series(gen_fit, eps, hypothesis=h, reduced=reduced,
                                          start_season=y.start_season)
        batch = batch_hegy(ystar, cfg.k_max, prune=True, t_threshold=cfg.t_threshold,
                           f_sets=f_sets)
        stats[lo:hi] = batch.statistic(rule.statistic)
    if not np.all(np.isfinite(stats)):
        raise ConfigurationError("non-finite bootstrap statistics; the fitted recursion is degenerate")

    p, count = bootstrap_pvalue(obs_value, stats, rule.tail, cfg.pvalue_rule)
    return TestReport(
        hypothesis=str(h),
        method="iid-aug",
        statistic=rule.statistic,
        tail=rule.tail,
        observed_statistic=float(obs_value),
        bootstrap_statistics=stats,
        p_value=p,
        reject=decide(p, cfg.level, cfg.pvalue_rule),
        level=cfg.level,
        pvalue_rule=cfg.pvalue_rule,
        config=asdict(cfg),
        diagnostics={
            "n_obs": y.length,
            "observed_retained_lags": list(observed.retained_lags),
            "residuals_per_season": fit.sample_sizes,
            "pruning": [
                {"vif_removed": list(e["vif_removed"]), "t_removed": [nm for nm, tv in e["t_removed"] if tv is not None]}
                for e in fit.removal_log
            ],
            "truncation_events": gen_fit.truncation_events,
            "reduced_recursion": reduced,
            "pi_used": pi_used,
            "phi_used": gen_fit.phi,
            "extreme_count": count,
        },
    )
