"""Command-line front end: ``hegyboot test | simulate | power-curve``.

Exit codes: 0 on success, 2 for configuration errors, 3 for data errors.
Every error is written to standard error as ``hegyboot: <kind> error: ...``.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import math
import re
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .boot_block import BlockBootConfig
from .boot_iid import IidBootConfig
from .core_series import QuarterlySeries
from .errors import (
    ConfigurationError,
    DataError,
    HegyError,
    LengthNotMultipleOfFour,
    MissingValue,
    ParseError,
)
from .hegy import Hypothesis
from .sim_lab import (
    NOISE_KINDS,
    REFERENCE_SIZES,
    RHO_GRID,
    TARGET_ROOTS,
    BootstrapProcedure,
    DgpSpec,
    NoiseSpec,
    TableCell,
    parse_cell,
    power_curve,
    table_cell_experiment,
)

logger = logging.getLogger("hegyboot")

SCHEMA_VERSION = 1
EXIT_OK, EXIT_CONFIG, EXIT_DATA = 0, 2, 3
METHODS = ("iid-aug", "block-unaug")
MISSING_TOKENS = {"", "na", "nan", "null", "none", "."}
_PERIOD = re.compile(r"^(\d{1,4})\s*[Qq]([1-4])$")


class _Parser(argparse.ArgumentParser):
    """Argument parser whose usage errors carry the configuration prefix."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_CONFIG, f"hegyboot: configuration error: {message}\n")


def _parse_value(text: str, line: int) -> float:
    if text.strip().lower() in MISSING_TOKENS:
        raise MissingValue(f"missing value {text.strip()!r}", line)
    try:
        x = float(text)
    except ValueError:
        raise ParseError(f"cannot read {text.strip()!r} as a number", line) from None
    if not math.isfinite(x):
        raise MissingValue(f"non-finite value {text.strip()!r}", line)
    return x


def _parse_period(text: str, line: int) -> tuple[int, int]:
    m = _PERIOD.match(text.strip())
    if not m:
        raise ParseError(f"period {text.strip()!r} is not of the form YYYYQn", line)
    return int(m.group(1)), int(m.group(2))


def ingest_csv(path, start_season: int | None = None) -> QuarterlySeries:
    """Read a quarterly series from a CSV file.

    Accepted layouts are one value per row (optionally under a ``value``
    header) or ``period,value`` rows with periods like ``2001Q3``.  With a
    period column the start season comes from the first period and the
    periods must be consecutive quarters; otherwise ``start_season`` is
    used (default 1).  Blank lines are skipped.
    """
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise DataError(f"cannot read {path}: {exc.strerror or exc}") from None
    rows = [(i, r) for i, r in enumerate(csv.reader(io.StringIO(text)), start=1)
            if r and any(c.strip() for c in r)]
    if not rows:
        raise DataError(f"{path} holds no data")
    first_line, first = rows[0]
    header = [c.strip().lower() for c in first]
    if header in (["value"], ["period", "value"]):
        ncol = len(header)
        rows = rows[1:]
    else:
        ncol = len(first)
        if ncol not in (1, 2):
            raise ParseError(f"expected 1 or 2 columns, found {ncol}", first_line)
    if not rows:
        raise DataError(f"{path} has a header but no values")

    values = []
    periods = []
    for line, row in rows:
        if len(row) != ncol:
            raise ParseError(f"expected {ncol} column(s), found {len(row)}", line)
        if ncol == 2:
            periods.append((_parse_period(row[0], line), line))
        values.append(_parse_value(row[-1], line))

    if periods:
        (year, q), _ = periods[0]
        for (cur, line), (prev, _) in zip(periods[1:], periods[:-1]):
            expect = (prev[0] + prev[1] // 4, prev[1] % 4 + 1)
            if cur != expect:
                raise ParseError(f"period {cur[0]}Q{cur[1]} does not follow {prev[0]}Q{prev[1]}", line)
        if start_season is not None and start_season != q:
            raise ConfigurationError(
                f"--start-season {start_season} contradicts the first period {year}Q{q}"
            )
        start_season = q
    return QuarterlySeries(np.array(values), start_season or 1)


def _positive_int(text):
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError(f"must be >= 1, got {v}")
    return v


def _nonneg_int(text):
    v = int(text)
    if v < 0:
        raise argparse.ArgumentTypeError(f"must be >= 0, got {v}")
    return v


def _bool(text):
    t = text.strip().lower()
    if t in ("true", "yes", "1"):
        return True
    if t in ("false", "no", "0"):
        return False
    raise argparse.ArgumentTypeError(f"expected true or false, got {text!r}")


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="hegyboot", description="Bootstrap HEGY seasonal unit-root tests.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    p.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    t = sub.add_parser("test", help="run one bootstrap test on a CSV series")
    t.add_argument("--input", required=True, help="CSV file with the series")
    t.add_argument("--hypothesis", required=True, help="root set, e.g. 1, 2, 12, 34, 134, 234, 1234")
    t.add_argument("--method", choices=METHODS, default="iid-aug")
    t.add_argument("--start-season", type=int, choices=(1, 2, 3, 4), default=None)
    t.add_argument("--B", type=_positive_int, default=500)
    t.add_argument("--seed", type=_nonneg_int, default=0)
    t.add_argument("--level", type=float, default=0.05)
    t.add_argument("--pvalue-rule", choices=("smoothed", "paper_count"), default="smoothed")
    t.add_argument("--output", help="write the report here instead of stdout")
    t.add_argument("--format", choices=("json",), default="json")
    g = t.add_argument_group("iid-aug options")
    g.add_argument("--k-max", type=_nonneg_int, default=None)
    g.add_argument("--vif-threshold", type=float, default=None)
    g.add_argument("--t-threshold", type=float, default=None)
    g.add_argument("--no-reduced-recursion", action="store_true", default=None,
                   help="generate single-root nulls with the full recursion")
    g = t.add_argument_group("block-unaug options")
    g.add_argument("--b", type=_positive_int, default=None, help="block size")
    g.add_argument("--statistic", choices=("t", "pi"), default=None)
    g.add_argument("--taper", choices=("none", "trapezoid"), default=None)
    g.add_argument("--ramp-fraction", type=float, default=None)

    s = sub.add_parser("simulate", help="reproduce empirical sizes of the size tables")
    s.add_argument("--seed", type=_nonneg_int, required=True)
    what = s.add_mutually_exclusive_group(required=True)
    what.add_argument("--cell", help='one cell such as "False,iid,t4" (needs --table)')
    what.add_argument("--row", choices=NOISE_KINDS, help="every column of one noise row (needs --table)")
    what.add_argument("--full", action="store_true",
                      help="full power study: every root, nuisance case, noise, method and rho")
    s.add_argument("--table", type=int, choices=(3, 4, 5))
    s.add_argument("--nuisance", type=_bool, default=None, help="nuisance flag for --row")
    s.add_argument("--N", type=_positive_int, default=None)
    s.add_argument("--B", type=_positive_int, default=None)
    s.add_argument("--T", type=_positive_int, default=120, help="years of data")
    s.add_argument("--level", type=float, default=0.05)
    s.add_argument("--threads", type=_positive_int, default=None)
    s.add_argument("--format", choices=("csv", "json"), default="csv")
    s.add_argument("--output")

    c = sub.add_parser("power-curve", help="rejection rates over the rho grid")
    c.add_argument("--root", choices=TARGET_ROOTS, required=True)
    c.add_argument("--nuisance", type=_bool, required=True)
    c.add_argument("--noise", choices=NOISE_KINDS, default="iid")
    c.add_argument("--method", choices=METHODS + ("both",), default="both")
    c.add_argument("--rho-grid", default=",".join(str(r) for r in RHO_GRID),
                   help="comma-separated rho values")
    c.add_argument("--N", type=_positive_int, default=300)
    c.add_argument("--B", type=_positive_int, default=250)
    c.add_argument("--T", type=_positive_int, default=120)
    c.add_argument("--level", type=float, default=0.05)
    c.add_argument("--seed", type=_nonneg_int, default=0)
    c.add_argument("--threads", type=_positive_int, default=None)
    c.add_argument("--format", choices=("csv", "json"), default="csv")
    c.add_argument("--output")
    return p


_IID_FLAGS = {"k_max": "k_max", "vif_threshold": "vif_threshold", "t_threshold": "t_threshold"}
_BLOCK_FLAGS = {"b": "b", "statistic": "statistic_choice", "taper": "taper",
                "ramp_fraction": "ramp_fraction"}


def _flag(name: str) -> str:
    return "--" + name.replace("_", "-")


def _test_config(args):
    common = dict(B=args.B, level=args.level, seed=args.seed, pvalue_rule=args.pvalue_rule)
    own, other = (_IID_FLAGS, _BLOCK_FLAGS) if args.method == "iid-aug" else (_BLOCK_FLAGS, _IID_FLAGS)
    extra = dict(other)
    if args.method == "block-unaug":
        extra["no_reduced_recursion"] = None
    stray = [_flag(f) for f in extra if getattr(args, f) is not None]
    if stray:
        raise ConfigurationError(f"{', '.join(stray)} not valid with --method {args.method}")
    kw = {param: getattr(args, f) for f, param in own.items() if getattr(args, f) is not None}
    if args.method == "iid-aug":
        if args.no_reduced_recursion:
            kw["use_reduced_recursion_for_single_roots"] = False
        return IidBootConfig(**common, **kw)
    return BlockBootConfig(**common, **kw)


def _emit(text: str, output: str | None):
    if output:
        Path(output).write_text(text)
    else:
        sys.stdout.write(text)


def _dump_json(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=False, allow_nan=False) + "\n"


def _run_test(args) -> int:
    cfg = _test_config(args)
    h = Hypothesis.parse(args.hypothesis)
    y = ingest_csv(args.input, args.start_season)
    if y.length % 4:
        raise LengthNotMultipleOfFour(f"the tests need whole years; got {y.length} observations")
    report = BootstrapProcedure(args.method, h, cfg)(y, args.seed)
    doc = {
        "schema_version": SCHEMA_VERSION,
        "command": "test",
        "input": {"path": str(args.input), "n_obs": y.length, "start_season": y.start_season},
        "seed": args.seed,
        "report": report.to_dict(),
    }
    _emit(_dump_json(doc), args.output)
    return EXIT_OK


def _rows_to_csv(rows: list[dict]) -> str:
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=list(rows[0]), lineterminator="\n")
    w.writeheader()
    for r in rows:
        w.writerow({k: (repr(float(v)) if isinstance(v, float) else v) for k, v in r.items()})
    return buf.getvalue()


def _render(rows: list[dict], fmt: str, command: str, meta: dict) -> str:
    if fmt == "csv":
        return _rows_to_csv(rows)
    return _dump_json({"schema_version": SCHEMA_VERSION, "command": command, **meta, "rows": rows})


def _cell_row(cell: TableCell, res) -> dict:
    return {
        "table": cell.table,
        "nuisance": cell.nuisance,
        "noise": cell.noise,
        "column": cell.column,
        "rate": res.rejection_rate,
        "se": res.se,
        "N": res.N,
        "reference": cell.reference,
    }


def _run_simulate(args) -> int:
    if args.full:
        if args.table is not None or args.nuisance is not None:
            raise ConfigurationError("--full runs every cell; drop --table and --nuisance")
        return _run_full(args)
    if args.table is None:
        raise ConfigurationError("--cell and --row need --table")
    N = args.N or 300
    B = args.B or 250
    if args.cell:
        if args.nuisance is not None:
            raise ConfigurationError("--nuisance is part of --cell")
        cells = [parse_cell(args.table, args.cell)]
    else:
        if args.nuisance is None:
            raise ConfigurationError("--row needs --nuisance true|false")
        cols = REFERENCE_SIZES[args.table][(args.nuisance, args.row)]
        cells = [TableCell(args.table, args.nuisance, args.row, col) for col in cols]
    rows = []
    for cell in cells:
        res = table_cell_experiment(cell, N=N, B=B, T=args.T, level=args.level,
                                    seed=args.seed, threads=args.threads)
        logger.info("table %d cell %s: %s (reference %.3f)", cell.table, cell, res.summary(), cell.reference)
        rows.append(_cell_row(cell, res))
    meta = {"seed": args.seed, "N": N, "B": B, "T": args.T, "level": args.level}
    _emit(_render(rows, args.format, "simulate", meta), args.output)
    return EXIT_OK


def _procedures(method: str, hypothesis, B: int, level: float):
    out = []
    if method in ("iid-aug", "both"):
        out.append(BootstrapProcedure("iid-aug", hypothesis, IidBootConfig(B=B, level=level)))
    if method in ("block-unaug", "both"):
        out.append(BootstrapProcedure("block-unaug", hypothesis, BlockBootConfig(B=B, level=level)))
    return out


def _curve_rows(template: DgpSpec, method: str, B: int, N: int, level: float, grid, seed, threads):
    """One row per rho with a rate/se column pair per method."""
    rows = [{"rho": float(r)} for r in grid]
    for proc in _procedures(method, template.hypothesis, B, level):
        results = power_curve(template, proc, N, grid, seed=seed, threads=threads)
        key = proc.method.replace("-", "_")
        for row, res in zip(rows, results):
            logger.info("%s %s rho=%g: %s", template.target_root, proc.method, res.dgp.rho, res.summary())
            row[f"{key}_rate"] = res.rejection_rate
            row[f"{key}_se"] = res.se
    return rows


def _parse_grid(text: str):
    try:
        grid = [float(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise ConfigurationError(f"cannot parse rho grid {text!r}") from None
    if not grid:
        raise ConfigurationError("rho grid is empty")
    return grid


def _run_power_curve(args) -> int:
    grid = _parse_grid(args.rho_grid)
    template = DgpSpec(args.root, args.nuisance, 0.0, NoiseSpec(args.noise), args.T, args.seed)
    rows = _curve_rows(template, args.method, args.B, args.N, args.level, grid, args.seed, args.threads)
    meta = {"root": args.root, "nuisance": args.nuisance, "noise": args.noise, "seed": args.seed,
            "N": args.N, "B": args.B, "T": args.T, "level": args.level}
    _emit(_render(rows, args.format, "power-curve", meta), args.output)
    return EXIT_OK


def _run_full(args) -> int:
    N = args.N or 600
    B = args.B or 500
    rows = []
    for root in TARGET_ROOTS:
        for nuisance in (False, True):
            for noise in NOISE_KINDS:
                template = DgpSpec(root, nuisance, 0.0, NoiseSpec(noise), args.T, args.seed)
                for r in _curve_rows(template, "both", B, N, args.level, RHO_GRID, args.seed, args.threads):
                    rows.append({"root": root, "nuisance": nuisance, "noise": noise, **r})
    meta = {"seed": args.seed, "N": N, "B": B, "T": args.T, "level": args.level}
    _emit(_render(rows, args.format, "simulate", meta), args.output)
    return EXIT_OK


_COMMANDS = {"test": _run_test, "simulate": _run_simulate, "power-curve": _run_power_curve}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="hegyboot: %(message)s", stream=sys.stderr)
    try:
        return _COMMANDS[args.command](args)
    except ConfigurationError as exc:
        print(f"hegyboot: configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except DataError as exc:
        print(f"hegyboot: data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except HegyError as exc:
        print(f"hegyboot: computation error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
