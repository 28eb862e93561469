"""Command-line interface.

Commands: estimate, simulate dgp, simulate hf, ingest candles,
bench <table|custom>, spectrum. Flag values take precedence over the
--config file (flat JSON keyed by long flag names), which takes
precedence over built-in defaults; the effective configuration is echoed
into every JSON output. Exit codes: 0 success, 1 usage/config error,
2 non-convergence, 3 I/O error.
"""
from __future__ import annotations

import argparse
import datetime as _dt
import json
import sys
import time
from pathlib import Path
from typing import Dict, List, Optional

import numpy as np

from . import __version__
from .bench import (
    DESK_NP_GRID,
    HF_P_GRID,
    HF_RHO_GRID,
    STRUCTURES,
    LamMode,
    bench_result_to_dict,
    calibrate_rate_constant,
    desk_cells,
    hf_cells,
    hf_result_to_dict,
    run_custom_cell,
    run_desk_cell,
    run_hf_cell,
)
from .errors import (
    DuplicateBar,
    EmptyInput,
    InsufficientData,
    InvalidInput,
    IstcovError,
    MissingBar,
    NotPositiveDefinite,
    ParseError,
    UsageError,
)
from .estimator import (
    AdmmConfig,
    admm_solve,
    lambda_rate,
    select_lambda_cv,
    support_size,
)
from .hfsim import HfSimSpec, block_aggregate, instantaneous_covariance, simulate_paths
from .ingest import (
    PanelSpec,
    bars_to_intervals,
    read_candles,
    read_interval_csv,
    read_matrix_csv,
    write_interval_csv,
    write_matrix_csv,
)
from .intervals import bound_covariances
from .linalg import eigh, symmetrize
from .synthetic import (
    DGP_KINDS,
    NOISE_KINDS,
    CovSpec,
    DgpSpec,
    build_covariance,
    generate_intervals,
)

DEFAULTS = {
    "seed": 0,
    "workers": 1,
    "lambda": "rate:1.0",
    "epsilon": 1e-4,
    "beta": 1.0,
    "tol": None,  # None -> dimension-scaled solver default
    "max_iter": 5000,
    "reps": 10,
    "max_dim": 2000,
    "out": ".",
}


class _Parser(argparse.ArgumentParser):
    # argparse exits with code 2 on bad usage; route through UsageError
    # so the exit-code contract (1) holds.
    def error(self, message):
        raise UsageError(message)


def _json_default(obj):
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    raise TypeError(f"not JSON serializable: {type(obj)}")


def _write_json(path: Path, payload: Dict):
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True, default=_json_default)
        fh.write("\n")


def _load_config_file(path: Optional[str]) -> Dict:
    if not path:
        return {}
    with open(path, "r", encoding="utf-8") as fh:
        raw = json.load(fh)
    if not isinstance(raw, dict):
        raise UsageError(f"config file {path} must hold a flat JSON object")
    out = {}
    for key, value in raw.items():
        norm = str(key).replace("-", "_").lstrip("_")
        if isinstance(value, dict):
            raise UsageError(f"config key {key!r} must be a scalar, not an object")
        out[norm] = value
    return out


def _add_common(parser: argparse.ArgumentParser, *, reps: bool = False):
    parser.add_argument("--seed", type=int, default=None, help="root seed")
    parser.add_argument("--config", default=None, help="flat JSON config file")
    parser.add_argument("--out", default=None, help="output directory")
    parser.add_argument("--workers", type=int, default=None, help="parallel workers")
    parser.add_argument(
        "--lambda", dest="lam", default=None,
        help="penalty mode: fixed value, rate:C, or cv[:grid:folds]",
    )
    parser.add_argument("--epsilon", type=float, default=None, help="eigenvalue floor")
    parser.add_argument("--beta", type=float, default=None, help="splitting penalty")
    parser.add_argument(
        "--tol", type=float, default=None,
        help="stopping tolerance for both residual and jump (default 1e-7 * p)",
    )
    parser.add_argument("--max-iter", type=int, default=None, help="iteration cap")
    if reps:
        parser.add_argument("--reps", type=int, default=None, help="replications")


class _Settings:
    """Flag > config-file > default resolution with an echo dict."""

    def __init__(self, args: argparse.Namespace):
        self.args = args
        self.config = _load_config_file(getattr(args, "config", None))

    def get(self, key: str, default=None, cast=None):
        cli = getattr(self.args, key if key != "lambda" else "lam", None)
        if cli is not None:
            return cli
        if key.replace("-", "_") in self.config:
            value = self.config[key.replace("-", "_")]
            return cast(value) if cast and value is not None else value
        if default is not None:
            return default
        return DEFAULTS.get(key)

    def admm_config(self, lam: float = 0.0) -> AdmmConfig:
        tol = self.get("tol")
        return AdmmConfig(
            lam=lam,
            beta=float(self.get("beta")),
            epsilon=float(self.get("epsilon")),
            tol_primal=float(tol) if tol is not None else None,
            tol_change=float(tol) if tol is not None else None,
            max_iter=int(self.get("max_iter")),
        )

    def echo(self, extra: Optional[Dict] = None) -> Dict:
        tol = self.get("tol")
        payload = {
            "version": __version__,
            "seed": int(self.get("seed")),
            "workers": int(self.get("workers")),
            "lambda_mode": str(self.get("lambda")),
            "epsilon": float(self.get("epsilon")),
            "beta": float(self.get("beta")),
            "tol": float(tol) if tol is not None else None,
            "max_iter": int(self.get("max_iter")),
        }
        if extra:
            payload.update(extra)
        return payload


def _resolve_lambda(mode_text: str, settings: _Settings, data, n: int, p: int):
    """Returns (lam, description dict). CV needs the interval data."""
    mode = LamMode.parse(str(mode_text))
    if mode.kind == "fixed":
        return mode.value, {"mode": mode.describe()}
    if mode.kind == "rate":
        return lambda_rate(n, p, mode.value), {"mode": mode.describe()}
    if data is None:
        raise UsageError("cv lambda mode needs interval data input")
    grid = mode.grid if mode.grid else tuple(
        lambda_rate(n, p, c) for c in (0.25, 0.5, 1.0, 2.0, 4.0)
    )
    rng = np.random.default_rng(np.random.SeedSequence([int(settings.get("seed")), 0xCF]))
    lam, table = select_lambda_cv(data, grid, mode.folds, settings.admm_config(), rng)
    return lam, {"mode": mode.describe(), "cv_table": table}


def cmd_estimate(args) -> int:
    settings = _Settings(args)
    out_dir = Path(settings.get("out"))
    name = args.name or Path(args.input).name
    data, names = read_interval_csv(args.input)
    max_dim = int(settings.get("max_dim", DEFAULTS["max_dim"]))
    if data.p > max_dim:
        raise UsageError(f"p={data.p} exceeds the configured cap {max_dim}")
    s_l, s_u = bound_covariances(data)

    lam, lam_info = _resolve_lambda(settings.get("lambda"), settings, data, data.n, data.p)
    config = settings.admm_config(lam=lam)
    t0 = time.perf_counter()
    result = admm_solve(s_l, s_u, config)
    elapsed = time.perf_counter() - t0

    sigma_path = out_dir / f"{name}.sigma.csv"
    write_matrix_csv(sigma_path, result.gamma, names)
    diagnostics = {
        "config": settings.echo({"input": str(args.input), "name": name}),
        "lambda": lam,
        "lambda_info": lam_info,
        "n": data.n,
        "p": data.p,
        "iterations": result.iterations,
        "converged": result.converged,
        "primal_residual_trace": result.primal_residual_trace,
        "change_trace": result.change_trace,
        "kkt": {
            "offdiag_subgrad_max": result.kkt.offdiag_subgrad_max,
            "diag_residual_max": result.kkt.diag_residual_max,
            "primal_gap": result.kkt.primal_gap,
            "cone_violation": result.kkt.cone_violation,
        },
        "min_eigenvalue": result.min_eigenvalue,
        "support_size": support_size(result.sigma),
        "timing": {"solve_seconds": elapsed},
    }
    _write_json(out_dir / f"{name}.diagnostics.json", diagnostics)
    print(f"wrote {sigma_path}")
    return 0 if result.converged else 2


def cmd_simulate_dgp(args) -> int:
    settings = _Settings(args)
    out_dir = Path(settings.get("out"))
    structure = args.structure
    if structure == "lr":
        cov = CovSpec(kind="lr", p=args.p, hurst=args.param)
    else:
        cov = CovSpec(kind=structure, p=args.p, rho=args.param)
    spec = DgpSpec(
        dgp=args.dgp,
        cov=cov,
        n=args.n,
        seed=int(settings.get("seed")),
        constant=args.constant,
        noise=args.noise,
    )
    data = generate_intervals(spec)
    truth = build_covariance(cov)
    base = out_dir / args.name
    write_interval_csv(data, base)
    write_matrix_csv(out_dir / f"{args.name}.truth.csv", truth)
    meta = settings.echo({
        "command": "simulate dgp",
        "dgp": args.dgp,
        "structure": structure,
        "n": args.n,
        "p": args.p,
        "param": args.param,
        "constant": args.constant,
        "noise": args.noise,
        "name": args.name,
    })
    _write_json(out_dir / f"{args.name}.meta.json", meta)
    print(f"wrote {base}.lower.csv / {base}.upper.csv")
    return 0


def cmd_simulate_hf(args) -> int:
    settings = _Settings(args)
    out_dir = Path(settings.get("out"))
    spec = HfSimSpec(
        p=args.p,
        rho=args.rho,
        n_seconds=args.n_seconds,
        block_seconds=args.block_seconds,
        seed=int(settings.get("seed")),
    )
    paths = simulate_paths(spec)
    data = block_aggregate(paths, spec.block_seconds)
    truth = instantaneous_covariance(spec)
    base = out_dir / args.name
    write_interval_csv(data, base)
    write_matrix_csv(out_dir / f"{args.name}.truth.csv", truth)
    meta = settings.echo({
        "command": "simulate hf",
        "p": args.p,
        "rho": args.rho,
        "n_seconds": args.n_seconds,
        "block_seconds": args.block_seconds,
        "n_blocks": data.n,
        "name": args.name,
    })
    _write_json(out_dir / f"{args.name}.meta.json", meta)
    print(f"wrote {base}.lower.csv / {base}.upper.csv ({data.n} blocks)")
    return 0


def cmd_ingest_candles(args) -> int:
    settings = _Settings(args)
    out_dir = Path(settings.get("out"))
    day = _dt.date.fromisoformat(args.day) if args.day else None
    if args.symbols:
        symbols = tuple(s.strip() for s in args.symbols.split(",") if s.strip())
    else:
        symbols = _scan_symbols(args.file)
    spec = PanelSpec(symbols=symbols, bar_seconds=args.bar_seconds, day=day)
    bars, report = read_candles(args.file, spec)
    data = bars_to_intervals(bars, spec)
    base = out_dir / args.name
    write_interval_csv(data, base, names=list(spec.symbols))
    payload = settings.echo({
        "command": "ingest candles",
        "file": str(args.file),
        "bar_seconds": args.bar_seconds,
        "day": args.day,
        "symbols": list(spec.symbols),
        "n": data.n,
        "p": data.p,
        "rows_total": report.rows_total,
        "bars_accepted": report.bars_accepted,
        "bars_rejected": report.bars_rejected,
        "rows_foreign_symbol": report.rows_foreign_symbol,
        "rows_outside_day": report.rows_outside_day,
        "rejection_reasons": report.rejection_reasons,
        "name": args.name,
    })
    _write_json(out_dir / f"{args.name}.report.json", payload)
    print(f"wrote {base}.lower.csv / {base}.upper.csv (n={data.n}, p={data.p})")
    return 0


def _scan_symbols(path) -> tuple:
    # Panel order when --symbols is omitted: sorted unique symbols.
    import csv as _csv

    seen = set()
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = _csv.reader(fh)
        try:
            next(reader)
        except StopIteration:
            raise EmptyInput(f"{path} is empty") from None
        for row in reader:
            if row and row[0].strip():
                seen.add(row[0].strip())
    if not seen:
        raise EmptyInput(f"{path} has no data rows")
    return tuple(sorted(seen))


def _parse_desk_cells(text: Optional[str]):
    if not text:
        return None
    cells = []
    for chunk in text.split(","):
        parts = chunk.strip().split(":")
        if len(parts) != 3:
            raise UsageError(f"desk cell must be structure:n:p, got {chunk!r}")
        structure, n, p = parts[0], int(parts[1]), int(parts[2])
        if structure not in STRUCTURES:
            raise UsageError(f"unknown structure {structure!r}")
        cells.append((structure, n, p))
    return cells


def _parse_hf_cells(text: Optional[str]):
    if not text:
        return None
    cells = []
    for chunk in text.split(","):
        parts = chunk.strip().split(":")
        if len(parts) != 2:
            raise UsageError(f"guided cell must be p:rho, got {chunk!r}")
        cells.append((int(parts[0]), float(parts[1])))
    return cells


def _bench_csv_rows_desk(results) -> List[List[str]]:
    rows = [[
        "table", "dgp", "structure", "n", "p", "constant", "lam_mode",
        "reps", "mean_frobenius", "sd_frobenius", "mean_spectral",
        "sd_spectral", "mean_support", "converged", "repaired_params",
    ]]
    for r in results:
        rows.append([
            r.table, r.dgp, r.structure, str(r.n), str(r.p),
            format(r.constant, ".16e"), r.lam_mode, str(r.reps),
            format(r.mean_frobenius, ".16e"), format(r.sd_frobenius, ".16e"),
            format(r.mean_spectral, ".16e"), format(r.sd_spectral, ".16e"),
            format(r.mean_support, ".16e"), str(r.converged_count),
            ";".join(f"{v:g}" for v in r.repaired_params),
        ])
    return rows


def _bench_csv_rows_hf(results) -> List[List[str]]:
    rows = [[
        "table", "p", "rho", "lam", "reps", "mean_frobenius", "sd_frobenius",
        "scale_c", "converged",
    ]]
    for r in results:
        rows.append([
            "table5", str(r.p), format(r.rho, "g"), format(r.lam, ".16e"),
            str(r.reps), format(r.mean_error, ".16e"),
            format(r.sd_error, ".16e"), format(r.scale_c, ".16e"),
            str(r.converged),
        ])
    return rows


def _write_csv(path: Path, rows: List[List[str]]):
    import csv as _csv

    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = _csv.writer(fh, lineterminator="\n")
        writer.writerows(rows)


def cmd_bench(args) -> int:
    settings = _Settings(args)
    out_dir = Path(settings.get("out"))
    seed = int(settings.get("seed"))
    workers = int(settings.get("workers"))
    reps = int(settings.get("reps"))
    table = args.table

    lam_text = getattr(args, "lam", None)
    calibration = None
    if lam_text is None and "lambda" in settings.config:
        lam_text = str(settings.config["lambda"])
    if table == "custom":
        mode = LamMode.parse(str(lam_text)) if lam_text else LamMode.parse(
            str(DEFAULTS["lambda"])
        )
    elif lam_text is not None:
        mode = LamMode.parse(str(lam_text))
    else:
        # Default bench rule: rate constant calibrated once on the
        # table's pilot cell and recorded in the output.
        c_best, sweep = calibrate_rate_constant(
            table, seed, workers=workers
        )
        mode = LamMode("rate", value=c_best)
        calibration = {"constant": c_best, "sweep": sweep}

    if table == "custom":
        result = run_custom_cell(
            table="custom",
            dgp=args.dgp,
            structure=args.structure,
            n=args.n,
            p=args.p,
            lam_mode=mode,
            reps=reps,
            root_seed=seed,
            workers=workers,
            constant=args.constant,
            params=[float(v) for v in args.params.split(",")] if args.params else None,
            noises=[args.noise] if args.noise else None,
            config=settings.admm_config(),
        )
        results = [result]
        csv_rows = _bench_csv_rows_desk(results)
        payload_cells = [bench_result_to_dict(r) for r in results]
    elif table == "table5":
        cells = _parse_hf_cells(args.cells) or hf_cells()
        results = [
            run_hf_cell(
                p, rho, lam_mode=mode, reps=reps, root_seed=seed,
                workers=workers, config=settings.admm_config(),
            )
            for p, rho in cells
        ]
        csv_rows = _bench_csv_rows_hf(results)
        payload_cells = [hf_result_to_dict(r) for r in results]
    elif table in ("table1", "table2", "table3"):
        cells = _parse_desk_cells(args.cells) or desk_cells(table)
        results = [
            run_desk_cell(
                table, structure, n, p, lam_mode=mode, reps=reps,
                root_seed=seed, workers=workers, constant=args.constant,
                config=settings.admm_config(),
            )
            for structure, n, p in cells
        ]
        csv_rows = _bench_csv_rows_desk(results)
        payload_cells = [bench_result_to_dict(r) for r in results]
    else:
        raise UsageError(
            f"unknown table {table!r}; expected table1, table2, table3, table5, custom"
        )

    name = args.name or table
    _write_csv(out_dir / f"{name}.cells.csv", csv_rows)
    payload = {
        "config": settings.echo({"command": f"bench {table}", "reps": reps}),
        "lambda_mode": mode.describe(),
        "calibration": calibration,
        "cells": payload_cells,
    }
    _write_json(out_dir / f"{name}.json", payload)
    print(f"wrote {out_dir / (name + '.cells.csv')} ({len(payload_cells)} cells)")
    return 0


def cmd_spectrum(args) -> int:
    settings = _Settings(args)
    out_dir = Path(settings.get("out"))
    mat, _names = read_matrix_csv(args.input)
    sym = symmetrize(mat, name="input matrix")
    system = eigh(sym)
    name = args.name or Path(args.input).stem
    eig_rows = np.column_stack([np.arange(1, sym.shape[0] + 1), system.values])
    diag_rows = np.column_stack([np.arange(1, sym.shape[0] + 1), np.diag(sym)])
    write_matrix_csv(out_dir / f"{name}.eigenvalues.csv", eig_rows,
                     names=["index", "eigenvalue"])
    write_matrix_csv(out_dir / f"{name}.diagonal.csv", diag_rows,
                     names=["index", "diagonal"])
    print(f"wrote {out_dir / (name + '.eigenvalues.csv')}")
    return 0


def build_parser() -> _Parser:
    parser = _Parser(prog="istcov", description=__doc__)
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    est = sub.add_parser("estimate", help="estimate from an interval CSV pair")
    est.add_argument("--input", required=True, help="base path of <base>.lower/.upper.csv")
    est.add_argument("--name", default=None, help="output base name")
    est.add_argument("--max-dim", type=int, default=None, help="dimension cap")
    _add_common(est)
    est.set_defaults(func=cmd_estimate)

    sim = sub.add_parser("simulate", help="generate synthetic interval data")
    sim_sub = sim.add_subparsers(dest="sim_kind", required=True)

    dgp = sim_sub.add_parser("dgp", help="desk-scale interval DGPs")
    dgp.add_argument("--dgp", choices=DGP_KINDS, required=True)
    dgp.add_argument("--structure", choices=STRUCTURES, required=True)
    dgp.add_argument("--n", type=int, required=True)
    dgp.add_argument("--p", type=int, required=True)
    dgp.add_argument("--param", type=float, required=True,
                     help="rho for ma1/ar1, Hurst for lr")
    dgp.add_argument("--constant", type=float, default=1.0)
    dgp.add_argument("--noise", choices=NOISE_KINDS, default=None)
    dgp.add_argument("--name", default="dgp")
    _add_common(dgp)
    dgp.set_defaults(func=cmd_simulate_dgp)

    hf = sim_sub.add_parser("hf", help="guided high-frequency simulation")
    hf.add_argument("--p", type=int, required=True)
    hf.add_argument("--rho", type=float, required=True)
    hf.add_argument("--n-seconds", type=int, default=23400)
    hf.add_argument("--block-seconds", type=int, default=300)
    hf.add_argument("--name", default="hf")
    _add_common(hf)
    hf.set_defaults(func=cmd_simulate_hf)

    ing = sub.add_parser("ingest", help="ingest market data files")
    ing_sub = ing.add_subparsers(dest="ingest_kind", required=True)
    candles = ing_sub.add_parser("candles", help="OHLC candle CSV to interval pair")
    candles.add_argument("--file", required=True)
    candles.add_argument("--symbols", default=None,
                         help="comma-separated panel order (default: sorted unique)")
    candles.add_argument("--bar-seconds", type=int, default=300)
    candles.add_argument("--day", default=None, help="restrict to a UTC date (ISO)")
    candles.add_argument("--name", default="panel")
    _add_common(candles)
    candles.set_defaults(func=cmd_ingest_candles)

    bench = sub.add_parser("bench", help="benchmark grids")
    bench.add_argument("table", help="table1|table2|table3|table5|custom")
    bench.add_argument("--cells", default=None,
                       help="subset: struct:n:p,... (desk) or p:rho,... (guided)")
    bench.add_argument("--name", default=None, help="output base name")
    bench.add_argument("--dgp", choices=DGP_KINDS, default="dgp1")
    bench.add_argument("--structure", choices=STRUCTURES, default="ar1")
    bench.add_argument("--n", type=int, default=100)
    bench.add_argument("--p", type=int, default=100)
    bench.add_argument("--params", default=None, help="custom parameter grid")
    bench.add_argument("--constant", type=float, default=1.0)
    bench.add_argument("--noise", choices=NOISE_KINDS, default=None)
    _add_common(bench, reps=True)
    bench.set_defaults(func=cmd_bench)

    spec = sub.add_parser("spectrum", help="plot-ready eigenvalue/diagonal data")
    spec.add_argument("--input", required=True, help="square matrix CSV")
    spec.add_argument("--name", default=None)
    _add_common(spec)
    spec.set_defaults(func=cmd_spectrum)
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.func(args)
    except (UsageError, InvalidInput, NotPositiveDefinite) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (
        OSError,
        ParseError,
        EmptyInput,
        DuplicateBar,
        MissingBar,
        InsufficientData,
        IstcovError,
    ) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3


def entry():
    sys.exit(main())


if __name__ == "__main__":
    entry()
