"""Monte Carlo laboratory: quarterly DGPs, noise processes and size/power runs.

A DGP is a composite lag filter applied to one of six noise processes.  The
filter contains the unit-root factor under study (multiplied by a near-unit
stationary factor ``1 - rho``) and, optionally, every remaining seasonal
unit-root factor as a nuisance.

Replicate ``i`` of an experiment seeded with ``seed`` draws its data from
``SeedSequence(seed, spawn_key=(i, 0))`` and seeds its bootstrap from
``SeedSequence(seed, spawn_key=(i, 1))``, so results do not depend on how
replicates are spread over worker processes.
"""

from __future__ import annotations

import math
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Callable, Sequence

import numpy as np

from .boot_block import BlockBootConfig, block_bootstrap_test
from .boot_iid import IidBootConfig, iid_bootstrap_test
from .core_series import LagPolynomial, QuarterlySeries, ar_recursion, multiply_polynomials
from .errors import ConfigurationError, ReplicateFailure, SeriesTooShort
from .hegy import Hypothesis

__all__ = [
    "NOISE_KINDS",
    "TARGET_ROOTS",
    "RHO_GRID",
    "NoiseSpec",
    "DgpSpec",
    "BootstrapProcedure",
    "ExperimentResult",
    "generate_noise",
    "generate_series",
    "composite_filter",
    "empirical_rejection",
    "power_curve",
    "power_table",
    "tilde_gamma",
    "TableCell",
    "parse_cell",
    "table_cell_experiment",
    "REFERENCE_SIZES",
    "resolve_threads",
]

NOISE_KINDS = ("iid", "heter", "ma_pos", "ma_neg", "ar", "period")
TARGET_ROOTS = ("plus1", "minus1", "complex")
RHO_GRID = (0.0, 0.004, 0.008, 0.012, 0.016, 0.020)
NOISE_BURN_IN = 100
SERIES_BURN_IN = 200

# hypothesis tested for each target root
ROOT_HYPOTHESIS = {"plus1": "1", "minus1": "2", "complex": "34"}


@dataclass(frozen=True)
class NoiseSpec:
    """One of the six innovation processes ``V_t`` driven by iid N(0, 1) ``eps_t``.

    ``iid``      V = eps
    ``heter``    V = sigma_s eps, sigma = (10, 1, 1, 1)
    ``ma_pos``   V = eps_t + 0.5 eps_{t-1}
    ``ma_neg``   V = eps_t - 0.5 eps_{t-1}
    ``ar``       V_t = eps_t + 0.5 V_{t-1}
    ``period``   V_t = eps_t + phi_s V_{t-1}, phi = (0.2, 0.45, 0.65, 0.8)
    """

    kind: str = "iid"
    sigma: tuple = (10.0, 1.0, 1.0, 1.0)
    ma: float = 0.5
    ar: float = 0.5
    phi: tuple = (0.2, 0.45, 0.65, 0.8)
    burn_in: int = NOISE_BURN_IN

    def __post_init__(self):
        if self.kind not in NOISE_KINDS:
            raise ConfigurationError(f"unknown noise kind {self.kind!r}; choose from {NOISE_KINDS}")
        object.__setattr__(self, "sigma", tuple(float(s) for s in self.sigma))
        object.__setattr__(self, "phi", tuple(float(p) for p in self.phi))
        if len(self.sigma) != 4 or len(self.phi) != 4:
            raise ConfigurationError("sigma and phi need one value per season")
        if any(abs(p) >= 1 for p in self.phi) or abs(self.ar) >= 1:
            raise ConfigurationError("autoregressive noise coefficients must lie inside (-1, 1)")
        if self.burn_in < 0 or self.burn_in % 4:
            raise ConfigurationError("noise burn-in must be a non-negative multiple of 4")


@dataclass(frozen=True)
class DgpSpec:
    """Quarterly DGP ``filter(L) Y_t = V_t`` over ``T`` years (``4 T`` observations)."""

    target_root: str = "plus1"
    nuisance: bool = False
    rho: float = 0.0
    noise: NoiseSpec = field(default_factory=NoiseSpec)
    T: int = 120
    seed: int = 0
    burn_in: int = SERIES_BURN_IN

    def __post_init__(self):
        if self.target_root not in TARGET_ROOTS:
            raise ConfigurationError(f"unknown target root {self.target_root!r}; choose from {TARGET_ROOTS}")
        if not 0 <= self.rho < 1:
            raise ConfigurationError(f"rho must lie in [0, 1), got {self.rho}")
        if self.T < 1:
            raise ConfigurationError("T must be at least one year")
        if isinstance(self.noise, str):
            object.__setattr__(self, "noise", NoiseSpec(self.noise))
        if self.burn_in < 0 or self.burn_in % 4:
            raise ConfigurationError("series burn-in must be a non-negative multiple of 4")

    @property
    def n(self) -> int:
        return 4 * self.T

    @property
    def hypothesis(self) -> Hypothesis:
        return Hypothesis.parse(ROOT_HYPOTHESIS[self.target_root])

    def filter(self) -> LagPolynomial:
        return composite_filter(self.target_root, self.nuisance, self.rho)


_ONE_MINUS_L = LagPolynomial([1.0, -1.0])
_ONE_PLUS_L = LagPolynomial([1.0, 1.0])
_ONE_PLUS_L2 = LagPolynomial([1.0, 0.0, 1.0])


def composite_filter(target_root: str, nuisance: bool, rho: float) -> LagPolynomial:
    """Lag filter of a DGP cell.

    The target factor is ``1 - (1 - rho) L``, ``1 + (1 - rho) L`` or
    ``1 + (1 - rho) L^2`` for roots at 1, -1 and +-i; with ``nuisance`` it is
    multiplied by the two other factors of ``1 - L^4``.
    """
    a = 1.0 - rho
    if target_root == "plus1":
        target, others = LagPolynomial([1.0, -a]), (_ONE_PLUS_L, _ONE_PLUS_L2)
    elif target_root == "minus1":
        target, others = LagPolynomial([1.0, a]), (_ONE_MINUS_L, _ONE_PLUS_L2)
    elif target_root == "complex":
        target, others = LagPolynomial([1.0, 0.0, a]), (_ONE_PLUS_L, _ONE_MINUS_L)
    else:
        raise ConfigurationError(f"unknown target root {target_root!r}")
    if not nuisance:
        return target
    out = target
    for f in others:
        out = multiply_polynomials(out, f)
    return out


def generate_noise(spec: NoiseSpec, n: int, rng: np.random.Generator) -> np.ndarray:
    """``n`` values of the noise process; position 0 belongs to season 1.

    Autoregressive kinds run for ``spec.burn_in`` extra steps (a multiple of
    four, so seasons stay aligned) which are discarded.
    """
    if n < 1:
        raise ConfigurationError(f"noise length must be >= 1, got {n}")
    kind = spec.kind
    if kind == "iid":
        return rng.standard_normal(n)
    if kind == "heter":
        sigma = np.asarray(spec.sigma)
        return sigma[np.arange(n) % 4] * rng.standard_normal(n)
    if kind in ("ma_pos", "ma_neg"):
        theta = spec.ma if kind == "ma_pos" else -spec.ma
        e = rng.standard_normal(n + 1)
        return e[1:] + theta * e[:-1]
    m = n + spec.burn_in
    e = rng.standard_normal(m)
    if kind == "ar":
        v = ar_recursion(LagPolynomial([1.0, -spec.ar]), e, [0.0])
    else:
        # periodic AR(1): the coefficient depends on the season of V_t
        phi = np.asarray(spec.phi)[np.arange(m) % 4]
        v = np.empty(m)
        prev = 0.0
        for t in range(m):
            prev = e[t] + phi[t] * prev
            v[t] = prev
    return v[spec.burn_in :]


def generate_series(spec: DgpSpec, rng: np.random.Generator | None = None) -> QuarterlySeries:
    """One sample path of ``spec`` as a season-1-aligned series of ``4 T`` values.

    The recursion starts from zeros.  When the filter is fully stationary
    (``rho > 0`` and no nuisance roots) the first ``spec.burn_in`` values are
    dropped so the path starts near its stationary law.
    """
    if rng is None:
        rng = np.random.default_rng(spec.seed)
    burn = spec.burn_in if (spec.rho > 0 and not spec.nuisance) else 0
    filt = spec.filter()
    v = generate_noise(spec.noise, spec.n + burn, rng)
    y = ar_recursion(filt, v, np.zeros(filt.degree))
    return QuarterlySeries(y[burn:], 1)


@dataclass(frozen=True)
class BootstrapProcedure:
    """A bootstrap test bound to a hypothesis, callable as ``proc(y, seed)``.

    ``config`` is an :class:`IidBootConfig` for ``method="iid-aug"`` or a
    :class:`BlockBootConfig` for ``method="block-unaug"``; its seed is
    replaced on every call.
    """

    method: str
    hypothesis: Hypothesis
    config: object = None

    def __post_init__(self):
        object.__setattr__(self, "hypothesis", Hypothesis.parse(self.hypothesis))
        if self.method == "iid-aug":
            cfg = self.config or IidBootConfig()
            if not isinstance(cfg, IidBootConfig):
                raise ConfigurationError("iid-aug needs an IidBootConfig")
        elif self.method == "block-unaug":
            cfg = self.config or BlockBootConfig()
            if not isinstance(cfg, BlockBootConfig):
                raise ConfigurationError("block-unaug needs a BlockBootConfig")
        else:
            raise ConfigurationError(f"unknown method {self.method!r}; use iid-aug or block-unaug")
        object.__setattr__(self, "config", cfg)

    @property
    def level(self) -> float:
        return self.config.level

    def with_level(self, level: float) -> "BootstrapProcedure":
        return replace(self, config=replace(self.config, level=level))

    def __call__(self, y: QuarterlySeries, seed: int):
        cfg = replace(self.config, seed=seed)
        if self.method == "iid-aug":
            return iid_bootstrap_test(y, self.hypothesis, cfg)
        return block_bootstrap_test(y, self.hypothesis, cfg)


@dataclass
class ExperimentResult:
    """Rejection frequency of one Monte Carlo experiment."""

    rejection_rate: float
    N: int
    decisions: np.ndarray
    p_values: np.ndarray
    wall_time: float
    dgp: DgpSpec | None = None
    seed: int = 0

    @property
    def se(self) -> float:
        p = self.rejection_rate
        return math.sqrt(p * (1.0 - p) / self.N)

    def summary(self) -> str:
        return f"{self.rejection_rate:.3f} +- {self.se:.3f} (N={self.N}, {self.wall_time:.1f}s)"


def resolve_threads(threads: int | None = None) -> int:
    """Worker count: explicit value, else ``HEGY_THREADS``, else the CPU count."""
    if threads is None:
        env = os.environ.get("HEGY_THREADS")
        if env:
            try:
                threads = int(env)
            except ValueError:
                raise ConfigurationError(f"HEGY_THREADS must be an integer, got {env!r}") from None
        else:
            threads = os.cpu_count() or 1
    if threads < 1:
        raise ConfigurationError(f"thread count must be >= 1, got {threads}")
    return threads


def _replicate_seeds(seed: int, i: int):
    data = np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed, spawn_key=(i, 0))))
    test_seed = int(np.random.SeedSequence(seed, spawn_key=(i, 1)).generate_state(1, np.uint64)[0])
    return data, test_seed


def _run_replicates(dgp: DgpSpec, test: Callable, seed: int, indices: Sequence[int]):
    out = []
    for i in indices:
        rng, test_seed = _replicate_seeds(seed, i)
        try:
            y = generate_series(dgp, rng)
            res = test(y, test_seed)
        except Exception as exc:
            raise ReplicateFailure(
                f"replicate {i} failed (experiment seed {seed}, data spawn key ({i}, 0), "
                f"test seed {test_seed}): {type(exc).__name__}: {exc}"
            ) from exc
        if isinstance(res, (bool, np.bool_)):
            out.append((bool(res), np.nan))
        else:
            out.append((bool(res.reject), float(res.p_value)))
    return out


def empirical_rejection(
    dgp: DgpSpec,
    test: Callable,
    N: int,
    level: float | None = None,
    seed: int | None = None,
    threads: int | None = None,
) -> ExperimentResult:
    """Rejection frequency of ``test`` over ``N`` independent paths of ``dgp``.

    Parameters
    ----------
    dgp : DgpSpec
    test : callable
        ``test(y, seed)`` returning a report with ``reject`` and ``p_value``
        attributes, or a plain bool.  A :class:`BootstrapProcedure` works.
    N : int
        Number of replications.
    level : float, optional
        Overrides the nominal level of a :class:`BootstrapProcedure`.
    seed : int, optional
        Experiment seed, default ``dgp.seed``.
    threads : int, optional
        Worker processes; see :func:`resolve_threads`.  The result is the same
        for every worker count.
    """
    if N < 1:
        raise ConfigurationError(f"N must be >= 1, got {N}")
    if level is not None:
        if not isinstance(test, BootstrapProcedure):
            raise ConfigurationError("level can only be overridden on a BootstrapProcedure")
        test = test.with_level(level)
    seed = dgp.seed if seed is None else seed
    workers = min(resolve_threads(threads), N)
    start = time.perf_counter()
    if workers == 1:
        rows = _run_replicates(dgp, test, seed, range(N))
    else:
        chunks = [list(range(N))[w::workers] for w in range(workers)]
        rows = [None] * N
        with ProcessPoolExecutor(max_workers=workers) as pool:
            futures = [pool.submit(_run_replicates, dgp, test, seed, c) for c in chunks]
            for c, fut in zip(chunks, futures):
                for i, r in zip(c, fut.result()):
                    rows[i] = r
    wall = time.perf_counter() - start
    decisions = np.array([r[0] for r in rows], dtype=bool)
    pvals = np.array([r[1] for r in rows], dtype=np.float64)
    return ExperimentResult(
        rejection_rate=float(decisions.mean()),
        N=N,
        decisions=decisions,
        p_values=pvals,
        wall_time=wall,
        dgp=dgp,
        seed=seed,
    )


def power_curve(
    template: DgpSpec,
    test: Callable,
    N: int,
    rho_grid: Sequence[float] = RHO_GRID,
    seed: int | None = None,
    threads: int | None = None,
) -> list[ExperimentResult]:
    """:func:`empirical_rejection` at every ``rho`` of the grid.

    Every grid point reuses the same experiment seed, so neighbouring points
    see the same innovations and the curve is smooth in ``rho``.
    """
    grid = list(rho_grid)
    if not grid:
        raise ConfigurationError("rho grid is empty")
    return [
        empirical_rejection(replace(template, rho=float(r)), test, N, seed=seed, threads=threads)
        for r in grid
    ]


def power_table(results: Sequence[ExperimentResult]) -> list[dict]:
    """Plot-ready ``(rho, rate, se)`` rows."""
    return [{"rho": r.dgp.rho, "rate": r.rejection_rate, "se": r.se} for r in results]


def tilde_gamma(v, h: int) -> float:
    """Season-averaged sample autocovariance at lag ``h``.

    ``(1/4) sum_s mean_t V_{4t+s} V_{4t+s-h}``: the lag-``h`` products are
    averaged within each season of their later index and the four season
    averages are then averaged.  Values are not demeaned.
    """
    if not isinstance(v, QuarterlySeries):
        v = QuarterlySeries(v)
    h = abs(int(h))
    if v.length < 4 + h:
        raise SeriesTooShort(f"need at least {4 + h} observations for lag {h}, got {v.length}")
    x = v.values
    prod = x[h:] * x[: x.size - h]
    season = v.season_index[h:]
    return float(np.mean([prod[season == s].mean() for s in (1, 2, 3, 4)]))


# Published empirical sizes of the block bootstrap test, T = 120, B = 250,
# N = 300.  Keyed by table, then (nuisance, noise), then column.
_COLS_T = ("pi4", "pi8", "pi12", "t4", "t8", "t12")
_COLS_F = ("F4", "F8", "F12")


def _table(cols, rows):
    out = {}
    for nuisance, block in ((False, rows[:6]), (True, rows[6:])):
        for noise, vals in zip(NOISE_KINDS, block):
            out[(nuisance, noise)] = dict(zip(cols, vals))
    return out


REFERENCE_SIZES = {
    3: _table(_COLS_T, [
        (0.067, 0.047, 0.043, 0.067, 0.050, 0.040),
        (0.057, 0.067, 0.050, 0.053, 0.063, 0.040),
        (0.090, 0.050, 0.030, 0.087, 0.050, 0.023),
        (0.080, 0.073, 0.093, 0.080, 0.060, 0.093),
        (0.043, 0.047, 0.063, 0.047, 0.053, 0.060),
        (0.043, 0.043, 0.047, 0.047, 0.043, 0.047),
        (0.137, 0.123, 0.110, 0.117, 0.110, 0.110),
        (0.160, 0.160, 0.193, 0.160, 0.150, 0.190),
        (0.063, 0.053, 0.073, 0.053, 0.043, 0.057),
        (0.517, 0.500, 0.570, 0.527, 0.500, 0.567),
        (0.010, 0.023, 0.033, 0.010, 0.020, 0.030),
        (0.017, 0.003, 0.023, 0.017, 0.007, 0.023),
    ]),
    4: _table(_COLS_T, [
        (0.040, 0.043, 0.053, 0.040, 0.047, 0.050),
        (0.040, 0.073, 0.040, 0.047, 0.060, 0.033),
        (0.080, 0.080, 0.073, 0.073, 0.080, 0.073),
        (0.060, 0.063, 0.043, 0.063, 0.067, 0.043),
        (0.040, 0.047, 0.050, 0.047, 0.047, 0.053),
        (0.030, 0.037, 0.050, 0.037, 0.033, 0.063),
        (0.143, 0.127, 0.127, 0.143, 0.120, 0.130),
        (0.123, 0.147, 0.177, 0.120, 0.140, 0.173),
        (0.483, 0.543, 0.533, 0.463, 0.550, 0.523),
        (0.070, 0.083, 0.077, 0.070, 0.070, 0.077),
        (0.240, 0.313, 0.343, 0.233, 0.313, 0.333),
        (0.247, 0.327, 0.310, 0.243, 0.310, 0.303),
    ]),
    5: _table(_COLS_F, [
        (0.053, 0.050, 0.047),
        (0.067, 0.090, 0.073),
        (0.067, 0.060, 0.047),
        (0.073, 0.040, 0.083),
        (0.047, 0.030, 0.030),
        (0.053, 0.040, 0.027),
        (0.017, 0.020, 0.017),
        (0.013, 0.020, 0.010),
        (0.087, 0.063, 0.097),
        (0.060, 0.067, 0.123),
        (0.113, 0.147, 0.120),
        (0.093, 0.100, 0.090),
    ]),
}

TABLE_ROOTS = {3: "plus1", 4: "minus1", 5: "complex"}


@dataclass(frozen=True)
class TableCell:
    """One cell of a block-bootstrap size table."""

    table: int
    nuisance: bool
    noise: str
    column: str

    @property
    def target_root(self) -> str:
        return TABLE_ROOTS[self.table]

    @property
    def statistic_choice(self) -> str:
        return "pi" if self.column.startswith("pi") else "t"

    @property
    def block_size(self) -> int:
        return int(self.column.lstrip("piFt"))

    @property
    def reference(self) -> float:
        return REFERENCE_SIZES[self.table][(self.nuisance, self.noise)][self.column]

    def __str__(self) -> str:
        return f"{self.nuisance},{self.noise},{self.column}"


def parse_cell(table: int, cell: str) -> TableCell:
    """Parse ``"False,iid,t4"`` style cell names for size tables 3, 4 and 5."""
    if table not in REFERENCE_SIZES:
        raise ConfigurationError(f"unknown table {table}; choose 3, 4 or 5")
    parts = [p.strip() for p in cell.split(",")]
    if len(parts) != 3:
        raise ConfigurationError(f"cell must look like 'False,iid,t4', got {cell!r}")
    flag, noise, column = parts
    if flag.lower() not in ("true", "false"):
        raise ConfigurationError(f"nuisance flag must be True or False, got {flag!r}")
    column = column.replace("_", "").replace("^", "")
    cols = _COLS_F if table == 5 else _COLS_T
    if column not in cols:
        raise ConfigurationError(f"table {table} has columns {cols}, got {column!r}")
    if noise not in NOISE_KINDS:
        raise ConfigurationError(f"unknown noise kind {noise!r}")
    return TableCell(table, flag.lower() == "true", noise, column)


def table_cell_experiment(
    cell: TableCell,
    N: int = 300,
    B: int = 250,
    T: int = 120,
    level: float = 0.05,
    seed: int = 0,
    threads: int | None = None,
) -> ExperimentResult:
    """Empirical size of the block bootstrap test for one table cell (``rho = 0``)."""
    dgp = DgpSpec(cell.target_root, cell.nuisance, 0.0, NoiseSpec(cell.noise), T, seed)
    cfg = BlockBootConfig(B=B, b=cell.block_size, level=level,
                          statistic_choice=cell.statistic_choice)
    return empirical_rejection(dgp, BootstrapProcedure("block-unaug", dgp.hypothesis, cfg),
                               N, seed=seed, threads=threads)
