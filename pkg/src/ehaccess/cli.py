"""Command-line front end.

Examples::

    ehaccess solve --lambda-high 0.15 --format json
    ehaccess simulate --scheme genie --mode idealized --lambda-high 0.15 --seed 7
    ehaccess sweep-lambda --grid-points 20 --slots 1000000 --replications 20 --output fig1.csv
    ehaccess sweep-battery --emax 1,2,5,10,20,50,100 --output fig2.csv

Values are resolved as command-line flag, then ``--config`` JSON file, then
built-in defaults (N=20, p_H=4e-3, p_L=2e-2, P_tx=1).
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import io
import json
import logging
import math
import sys

from . import __version__
from .experiments import sweep_battery, sweep_lambda
from .markov import EhChain
from .policies import (
    SolverError,
    genie_optimal,
    genie_qbar,
    genie_rbar,
    lambda_h_max,
    local_optimal,
    local_throughput,
    single_active_threshold,
)
from .sim import Mode, Scheme, SimConfig, default_burn_in, run

EXIT_USAGE = 2
EXIT_SOLVER = 3

DEFAULTS = {
    "nodes": 20,
    "p_high": 4e-3,
    "p_low": 20e-3,
    "lambda_high": None,  # resolved to lambda_H_max
    "ptx": 1.0,
    "scheme": None,
    "mode": "idealized",
    "emax": None,
    "slots": 100_000,
    "burn_in": None,
    "replications": 10,
    "seed": 0,
    "grid_points": 20,
    "output": None,
    "format": "csv",
}
DEFAULT_EMAX_SWEEP = "1..100"


class UsageError(ValueError):
    pass


def _fmt(value) -> str:
    if isinstance(value, float):
        if math.isnan(value):
            return "nan"
        return format(value, ".12g")
    return str(value)


def _jsonable(value):
    if isinstance(value, float) and not math.isfinite(value):
        return None
    if isinstance(value, dict):
        return {k: _jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    if hasattr(value, "tolist"):
        return _jsonable(value.tolist())
    return value


def render(metadata: dict, rows: list[dict], fmt: str, result=None) -> str:
    """Serialise a table (and optional JSON payload) with a metadata preamble."""
    if fmt == "json":
        doc = {"metadata": metadata, "rows": rows}
        if result is not None:
            doc["result"] = result
        return json.dumps(_jsonable(doc), indent=2, sort_keys=False) + "\n"
    buf = io.StringIO()
    for key, value in metadata.items():
        buf.write(f"# {key}: {_fmt(value) if not isinstance(value, (dict, list)) else json.dumps(_jsonable(value))}\n")
    if rows:
        writer = csv.writer(buf, lineterminator="\n")
        header = list(rows[0])
        writer.writerow(header)
        for row in rows:
            writer.writerow([_fmt(row[h]) for h in header])
    return buf.getvalue()


def parse_emax_list(text: str) -> list[int]:
    """``"1..100"`` (inclusive range) or ``"1,2,5"``."""
    text = str(text).strip()
    try:
        if ".." in text:
            lo, hi = (int(x) for x in text.split(".."))
            values = list(range(lo, hi + 1))
        else:
            values = [int(x) for x in text.split(",") if x.strip()]
    except ValueError as exc:
        raise UsageError(f"bad --emax value {text!r}") from exc
    if not values or min(values) < 1:
        raise UsageError(f"--emax needs a nonempty set of values >= 1, got {text!r}")
    return values


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    g = common.add_argument_group("model")
    g.add_argument("--nodes", type=int, help="number of nodes N (default 20)")
    g.add_argument("--p-high", type=float, help="L->H switching probability (default 4e-3)")
    g.add_argument("--p-low", type=float, help="H->L switching probability (default 2e-2)")
    g.add_argument("--lambda-high", type=float, help="mean harvested power in H (default lambda_H_max)")
    g.add_argument("--ptx", type=float, help="transmission power (default 1)")
    s = common.add_argument_group("simulation")
    s.add_argument("--scheme", choices=[x.value for x in Scheme])
    s.add_argument("--mode", choices=[x.value for x in Mode])
    s.add_argument("--emax", help="battery capacity in quanta; a list or A..B range for sweep-battery")
    s.add_argument("--slots", type=int)
    s.add_argument("--burn-in", type=int)
    s.add_argument("--replications", type=int)
    s.add_argument("--seed", type=int)
    s.add_argument("--grid-points", type=int)
    o = common.add_argument_group("output")
    o.add_argument("--output", help="output file (default stdout)")
    o.add_argument("--format", choices=["csv", "json"])
    o.add_argument("--config", help="JSON file with default values for any of the flags")

    parser = argparse.ArgumentParser(prog="ehaccess", description=__doc__.split("\n")[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("solve", parents=[common], help="print the local and genie-aided policies")
    sub.add_parser("sweep-lambda", parents=[common], help="throughput vs harvested power")
    sub.add_parser("sweep-battery", parents=[common], help="throughput vs battery capacity")
    sub.add_parser("simulate", parents=[common], help="run one Monte Carlo configuration")
    return parser


def resolve_options(args: argparse.Namespace) -> dict:
    opts = dict(DEFAULTS)
    if args.config:
        try:
            with open(args.config) as f:
                loaded = json.load(f)
        except (OSError, json.JSONDecodeError) as exc:
            raise UsageError(f"cannot read config {args.config}: {exc}") from exc
        for key, value in loaded.items():
            key = key.replace("-", "_")
            if key not in opts:
                raise UsageError(f"unknown config key {key!r}")
            opts[key] = value
    for key in DEFAULTS:
        value = getattr(args, key, None)
        if value is not None:
            opts[key] = value
    return opts


def _chain(opts: dict) -> tuple[int, EhChain]:
    n = int(opts["nodes"])
    if n < 1:
        raise UsageError("--nodes must be >= 1")
    chain = EhChain(float(opts["p_high"]), float(opts["p_low"]), 0.0, 0.0, float(opts["ptx"]))
    lam = opts["lambda_high"]
    lam = lambda_h_max(n, chain) if lam is None else float(lam)
    if not lam > 0.0:
        raise UsageError(f"--lambda-high must be > 0, got {lam}")
    return n, chain.with_lambda_h(lam)


def _metadata(command: str, opts: dict, n: int, chain: EhChain, **extra) -> dict:
    meta = {
        "tool": "ehaccess",
        "version": __version__,
        "command": command,
        "nodes": n,
        "p_high": chain.p_h,
        "p_low": chain.p_l,
        "lambda_high": chain.lambda_h,
        "ptx": chain.p_tx,
        "pi_high": chain.pi_h,
    }
    if command != "solve":
        meta.update(
            seed=int(opts["seed"]),
            slots=int(opts["slots"]),
            burn_in=default_burn_in(chain) if opts["burn_in"] is None else int(opts["burn_in"]),
            replications=int(opts["replications"]),
        )
    meta.update(extra)
    return meta


def _sim_kwargs(opts: dict) -> dict:
    return dict(
        slots=int(opts["slots"]),
        burn_in=None if opts["burn_in"] is None else int(opts["burn_in"]),
        seed=int(opts["seed"]),
        replications=int(opts["replications"]),
    )


def cmd_solve(opts: dict) -> str:
    n, chain = _chain(opts)
    local = local_optimal(n, chain)
    genie = genie_optimal(n, chain)
    summary = {
        "lambda_H_max": lambda_h_max(n, chain),
        "single_active_threshold": single_active_threshold(n, chain),
        "local_mu_H": local.mu_h,
        "local_Q_H": local.mu_h,
        "local_R": local_throughput(n, chain.pi_h * local.mu_h),
        "genie_regime": genie.regime.value,
        "genie_phi": genie.phi,
        "genie_Q_H": genie_qbar(genie, chain),
        "genie_R": genie_rbar(genie, chain),
    }
    rows = [{"m": m, "genie_mu_H": float(genie.mu[m - 1])} for m in range(1, n + 1)]
    meta = _metadata("solve", opts, n, chain, **summary)
    return render(meta, rows, opts["format"])


def cmd_simulate(opts: dict) -> str:
    if opts["scheme"] is None:
        raise UsageError("simulate requires --scheme")
    n, chain = _chain(opts)
    mode = Mode(opts["mode"])
    e_max = 0
    if mode is Mode.BATTERY:
        if opts["emax"] is None:
            raise UsageError("battery mode requires --emax")
        e_max = int(opts["emax"])
    config = SimConfig(n, chain, Scheme(opts["scheme"]), mode, e_max=e_max, **_sim_kwargs(opts))
    report = run(config)
    meta = _metadata(
        "simulate", opts, n, chain, scheme=config.scheme.value, mode=mode.value, e_max=e_max,
    )
    result = dataclasses.asdict(report)
    row = {k: v for k, v in result.items() if not isinstance(v, list)}
    row["outage_rate"] = report.outage_rate
    row["overflow_rate"] = report.overflow_rate
    return render(meta, [row], opts["format"], result=result)


def cmd_sweep_lambda(opts: dict) -> str:
    n, chain = _chain(opts)
    points = int(opts["grid_points"])
    if points < 1:
        raise UsageError("--grid-points must be >= 1")
    rows = sweep_lambda(n, chain, points, **_sim_kwargs(opts))
    meta = _metadata("sweep-lambda", opts, n, chain, grid_points=points,
                     lambda_H_max=lambda_h_max(n, chain))
    return render(meta, rows, opts["format"])


def cmd_sweep_battery(opts: dict) -> str:
    n, chain = _chain(opts)
    if chain.lambda_h > chain.p_tx:
        raise UsageError("battery mode needs lambda_high <= ptx")
    e_values = parse_emax_list(opts["emax"] if opts["emax"] is not None else DEFAULT_EMAX_SWEEP)
    rows = sweep_battery(n, chain, e_values, **_sim_kwargs(opts))
    meta = _metadata("sweep-battery", opts, n, chain, emax=e_values)
    return render(meta, rows, opts["format"])


COMMANDS = {
    "solve": cmd_solve,
    "simulate": cmd_simulate,
    "sweep-lambda": cmd_sweep_lambda,
    "sweep-battery": cmd_sweep_battery,
}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    try:
        opts = resolve_options(args)
        text = COMMANDS[args.command](opts)
    except SolverError as exc:
        print(f"ehaccess: solver failure: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    except (UsageError, ValueError) as exc:
        print(f"ehaccess {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    if opts["output"]:
        with open(opts["output"], "w", newline="") as f:
            f.write(text)
    else:
        sys.stdout.write(text)
    return 0


if __name__ == "__main__":
    sys.exit(main())
