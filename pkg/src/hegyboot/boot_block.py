"""Seasonal block bootstrap for the unaugmented HEGY test.

Blocks of demeaned season-by-season residuals are copied from start
positions shifted by whole years only, so every resampled value keeps its
season.  Blocks may be tapered before they are laid down.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import asdict, dataclass, replace

import numpy as np

from .core_series import QuarterlySeries
from .errors import BlockTooLong, ConfigurationError, DataError
from .hegy import (
    Hypothesis,
    SeasonalFit,
    batch_hegy,
    null_directions,
    seasonal_regression,
    truncate_pi,
    unaugmented_hegy,
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

__all__ = [
    "BlockBootConfig",
    "admissible_starts",
    "seasonal_block_resample",
    "trapezoid_weights",
    "apply_taper",
    "generate_block_bootstrap_series",
    "block_bootstrap_test",
]

CHUNK = 256


@dataclass(frozen=True)
class BlockBootConfig:
    B: int = 500
    b: int = 4
    level: float = 0.05
    seed: int = 0
    statistic_choice: str = "t"
    taper: str = "trapezoid"
    ramp_fraction: float = 0.1
    pvalue_rule: str = "smoothed"

    def __post_init__(self):
        if self.B < 1:
            raise ConfigurationError(f"B must be >= 1, got {self.B}")
        if self.b < 1:
            raise ConfigurationError(f"block size must be >= 1, got {self.b}")
        if not 0 < self.level < 1:
            raise ConfigurationError(f"level must lie in (0, 1), got {self.level}")
        if self.statistic_choice not in ("t", "pi"):
            raise ConfigurationError("statistic_choice must be 't' or 'pi'")
        if self.taper not in ("none", "trapezoid"):
            raise ConfigurationError("taper must be 'none' or 'trapezoid'")
        if not 0 <= self.ramp_fraction < 0.5:
            raise ConfigurationError("ramp_fraction must lie in [0, 0.5)")
        if self.pvalue_rule not in PVALUE_RULES:
            raise ConfigurationError(f"pvalue_rule must be one of {PVALUE_RULES}")

    def weights(self) -> np.ndarray:
        if self.taper == "none":
            return np.ones(self.b)
        return trapezoid_weights(self.b, self.ramp_fraction)


def admissible_starts(t: int, n: int, b: int) -> np.ndarray:
    """1-based start positions a block beginning at position ``t`` may copy from.

    ``{t - 4 R1, ..., t - 4, t, t + 4, ..., t + 4 R2}`` with
    ``R1 = floor((t - 1) / 4)`` and ``R2 = floor((n - b - t + 1) / 4)``.
    """
    r1 = (t - 1) // 4
    r2 = (n - b - t + 1) // 4
    return t + 4 * np.arange(-r1, r2 + 1)


def trapezoid_weights(b: int, ramp_fraction: float = 0.1) -> np.ndarray:
    """Symmetric trapezoid window of length ``b``.

    Each edge ramps linearly over ``ceil(ramp_fraction * b)`` points, taking
    the values ``(i - 0.5) / r`` for ``i = 1..r``; the middle is flat at 1.
    """
    r = math.ceil(ramp_fraction * b) if ramp_fraction > 0 else 0
    r = min(r, b // 2)
    w = np.ones(b)
    if r:
        ramp = (np.arange(1, r + 1) - 0.5) / r
        w[:r] = ramp
        w[b - r :] = ramp[::-1]
    return w


def apply_taper(block_values, weights) -> np.ndarray:
    """Weight a block and rescale by ``sqrt(b) / ||w||`` to keep its variance."""
    x = np.asarray(block_values, dtype=np.float64)
    w = np.asarray(weights, dtype=np.float64)
    if w.shape[-1] != x.shape[-1]:
        raise ConfigurationError("weights and block differ in length")
    return x * w * (math.sqrt(w.size) / np.linalg.norm(w))


def seasonal_block_resample(V_check, b: int, rng, weights=None, return_indices: bool = False):
    """Season-preserving block resample of ``V_check``.

    Blocks start at positions ``1, b + 1, ..., (l - 1) b + 1`` with
    ``l = floor(n / b)``; each copies ``b`` consecutive values beginning at a
    position drawn uniformly from :func:`admissible_starts`.  When ``l b < n``
    one more block is drawn (its admissible starts computed for the
    shortened length) and cut to fill the series.  ``weights`` tapers each
    block.  ``return_indices`` also returns the 0-based source index of
    every output value.
    """
    v = np.asarray(V_check, dtype=np.float64)
    n = v.size
    if b > n:
        raise BlockTooLong(f"block size {b} exceeds series length {n}")
    if b < 1:
        raise ConfigurationError("block size must be >= 1")
    l = n // b
    starts = list(range(0, l * b, b))
    lengths = [b] * l
    if l * b < n:
        starts.append(l * b)
        lengths.append(n - l * b)
    starts = np.array(starts)
    lengths = np.array(lengths)
    # 0-based: sources i with i = t (mod 4) and 0 <= i <= n - length
    base = starts % 4
    count = (n - lengths - base) // 4 + 1
    u = rng.random(starts.size)
    pick = np.minimum((u * count).astype(np.int64), count - 1)
    src = base + 4 * pick
    idx = np.arange(n) + np.repeat(src - starts, lengths)
    out = v[idx]
    if weights is not None:
        w = np.asarray(weights, dtype=np.float64)
        if w.size != b:
            raise ConfigurationError("taper weights must have the block length")
        scale = math.sqrt(b) / np.linalg.norm(w)
        out = out * w[np.arange(n) % b] * scale
    if return_indices:
        return out, idx
    return out


def generate_block_bootstrap_series(
    fit: SeasonalFit,
    V_star,
    hypothesis: Hypothesis | None = None,
    initial=None,
    start_season: int = 1,
) -> np.ndarray:
    """Unaugmented bootstrap-world recursion driven by ``V_star``."""
    pi = null_imposed_pi(fit, hypothesis)
    return generate_recursive(pi, np.zeros((4, 0)), V_star, initial=initial,
                              start_season=start_season)


def block_bootstrap_test(y: QuarterlySeries, h, cfg: BlockBootConfig = BlockBootConfig()) -> TestReport:
    """Seasonal block bootstrap unaugmented HEGY test of ``h`` on ``y``."""
    if not isinstance(y, QuarterlySeries):
        y = QuarterlySeries(y)
    if y.length % 4:
        raise DataError(f"need a whole number of years; got {y.length} observations")
    h = Hypothesis.parse(h)
    if cfg.b > math.sqrt(y.length):
        warnings.warn(
            f"block size {cfg.b} exceeds sqrt(n) = {math.sqrt(y.length):.1f}; "
            "the block bootstrap needs b small relative to the sample",
            stacklevel=2,
        )
    if y.length < 6 * cfg.b:
        warnings.warn(f"series of {y.length} observations is short for block size {cfg.b}",
                      stacklevel=2)
    rule = null_directions(h, cfg.statistic_choice)
    observed = unaugmented_hegy(y)
    obs_value = observed.statistic(rule.statistic)

    fit = seasonal_regression(y, 0, augmented=False, vif_threshold=np.inf, t_threshold=0.0)
    fit = replace(fit, residuals=demean_by_season(fit.residuals, fit.season))
    gen_fit = truncate_pi(fit)
    pi_used = null_imposed_pi(gen_fit, h)
    w = cfg.weights()
    tapered = cfg.taper != "none" and not np.all(w == 1)

    stats = np.empty(cfg.B)
    f_sets = [] if h.is_single else [h.indices]
    for lo in range(0, cfg.B, CHUNK):
        hi = min(lo + CHUNK, cfg.B)
        vstar = np.stack([
            seasonal_block_resample(fit.residuals, cfg.b, replicate_rng(cfg.seed, r),
                                    weights=w if tapered else None)
            for r in range(lo, hi)
        ])
        ystar = generate_block_bootstrap_series(gen_fit, vstar, hypothesis=h,
                                                start_season=y.start_season)
        stats[lo:hi] = batch_hegy(ystar, 0, f_sets=f_sets).statistic(rule.statistic)
    if not np.all(np.isfinite(stats)):
        raise ConfigurationError("non-finite bootstrap statistics; the fitted recursion is degenerate")

    p, count = bootstrap_pvalue(obs_value, stats, rule.tail, cfg.pvalue_rule)
    return TestReport(
        hypothesis=str(h),
        method="block-unaug",
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
            "residuals_per_season": fit.sample_sizes,
            "truncation_events": gen_fit.truncation_events,
            "pi_used": pi_used,
            "taper_weights": w if tapered else np.ones(cfg.b),
            "extreme_count": count,
        },
    )
