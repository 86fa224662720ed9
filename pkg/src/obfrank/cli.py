"""``obfrank`` command line.

Subcommands
-----------
max-rank   largest achievable rank for the configured model
region     Pareto boundary of the two-cell rank region (CSV)
validate   analytic outage vs Monte-Carlo estimate, with z-scores
sweep      maximum rank while one parameter varies (CSV)

Exit codes: 0 ok, 1 input error, 2 infeasible, 3 validation failure.
"""

from __future__ import annotations

import argparse
import io
import json
import math
import os
import sys
import time
from pathlib import Path
from typing import Optional, Sequence

from . import __version__, analytic, region
from . import config as cfgmod
from .config import MODELS, TWO_CELL_MODELS, Scenario
from .model import ConfigError
from .montecarlo import TrialConfig, estimate_outage

EXIT_OK = 0
EXIT_INPUT = 1
EXIT_INFEASIBLE = 2
EXIT_VALIDATION = 3

Z_FAIL = 4.0
SWEEP_PARAMS = ("K", "snr", "D", "eta", "p", "g", "alpha")


class InputError(Exception):
    pass


def fmt(x) -> str:
    """12 significant digits, '.' decimal point regardless of locale."""
    if x is None:
        return ""
    if isinstance(x, int):
        return str(x)
    return format(float(x), ".12g")


def parse_grid(spec: str) -> list[float]:
    """``START:STOP:STEP`` with STOP included when it lands on the grid."""
    try:
        start, stop, step = (float(v) for v in spec.split(":"))
    except ValueError:
        raise InputError(f"--grid must be START:STOP:STEP, got {spec!r}") from None
    if not step > 0 or stop < start:
        raise InputError(f"--grid needs STEP > 0 and STOP >= START, got {spec!r}")
    n = int(math.floor((stop - start) / step + 1e-9))
    return [round(start + i * step, 12) for i in range(n + 1)]


def parse_list(spec: str, kind=float) -> list:
    try:
        return [kind(v) for v in spec.split(",") if v.strip()]
    except ValueError:
        raise InputError(f"cannot parse list {spec!r}") from None


def metadata_lines(command: str, sc: Scenario, extra: Optional[dict] = None) -> list[str]:
    lines = [
        f"# command: {command}",
        f"# tool_version: {__version__}",
        f"# config_digest: {cfgmod.digest(sc)}",
        f"# model: {sc.model}",
        f"# seed: {sc.seed}",
    ]
    for key, value in (extra or {}).items():
        lines.append(f"# {key}: {value}")
    return lines


def csv_text(meta: list[str], header: Sequence[str], rows: list[Sequence]) -> str:
    buf = io.StringIO()
    for line in meta:
        buf.write(line + "\n")
    buf.write(",".join(header) + "\n")
    for row in rows:
        buf.write(",".join(v if isinstance(v, str) else fmt(v) for v in row) + "\n")
    return buf.getvalue()


def write_output(text: str, out: Optional[str], command: str, sc: Scenario, started: float) -> None:
    if out is None:
        sys.stdout.write(text)
        return
    path = Path(out)
    path.write_text(text, encoding="utf-8", newline="\n")
    manifest = {
        "command": command,
        "config_digest": cfgmod.digest(sc),
        "seed": sc.seed,
        "tool_version": __version__,
        "outputs": [str(path)],
        "duration_s": round(time.perf_counter() - started, 6),
    }
    path.with_suffix(".manifest.json").write_text(json.dumps(manifest, indent=2) + "\n", encoding="utf-8")


def print_table(header: Sequence[str], rows: list[Sequence], stream=None) -> None:
    stream = stream or sys.stdout
    cells = [list(header)] + [[v if isinstance(v, str) else fmt(v) for v in row] for row in rows]
    widths = [max(len(r[i]) for r in cells) for i in range(len(header))]
    for r in cells:
        stream.write("  ".join(c.ljust(w) for c, w in zip(r, widths)).rstrip() + "\n")


# ---------------------------------------------------------------- max rank


def max_rank_for(sc: Scenario) -> region.MaxRank:
    """Maximum relaxed rank for ``sc.model``; two-cell models use equal ranks unless ``l_other`` is set."""
    q, n, K, Nt = sc.qos, sc.noise_power, sc.K, sc.Nt
    if sc.model == "single-homo":
        return region.max_rank_homogeneous(q, sc.gain, n, K, Nt)
    if sc.model == "single-hetero":
        return region.max_rank_heterogeneous_single(q, sc.D, sc.alpha, n, K, sc.l_max, Nt)
    if sc.model == "wyner":
        if sc.l_other is not None:
            return region.max_rank_wyner(q, sc.l_other, sc.g, n, K, Nt)
        return region.equal_rank_wyner(q, sc.g, n, K, Nt)
    geom = sc.geometry
    if geom.n_cells != 2:
        raise InputError("two-hetero analytics need exactly two cells")
    if sc.l_other is not None:
        return region.max_rank_two_cell_heterogeneous(q, sc.l_other, geom, sc.alpha, n, K, sc.l_max, Nt, tol=sc.quad_tol)
    return region.equal_rank_two_cell_heterogeneous(q, geom, sc.alpha, n, K, sc.l_max, Nt, tol=sc.quad_tol)


def outage_at(sc: Scenario, ranks: Sequence[float], cell: int = 0, K: Optional[int] = None) -> float:
    """Analytic per-beam outage of ``cell`` under ``sc.model`` at the given ranks."""
    K = sc.K if K is None else K
    eta, n = sc.eta, sc.noise_power
    if sc.model == "single-homo":
        return analytic.outage_single_cell_homogeneous(eta, ranks[0], sc.gain, n, K)
    if sc.model == "single-hetero":
        return analytic.outage_single_cell_heterogeneous(eta, ranks[0], sc.D, sc.alpha, n, K)
    if sc.model == "wyner":
        own, other = ranks[cell], ranks[1 - cell]
        return analytic.outage_wyner(eta, own, other, sc.g, n, K)
    geom = sc.geometry
    if geom.n_cells != 2:
        raise InputError("two-hetero analytics need exactly two cells")
    return analytic.outage_two_cell_heterogeneous(eta, ranks[0], ranks[1], geom, sc.alpha, n, K, cell, sc.quad_tol)


def _describe(sc: Scenario, res: region.MaxRank) -> str:
    if sc.model in TWO_CELL_MODELS:
        return "given L_other" if sc.l_other is not None else "equal ranks"
    return "single cell"


def cmd_max_rank(args, sc: Scenario, started: float) -> int:
    res = max_rank_for(sc)
    if not res.feasible:
        print("infeasible at L=1", file=sys.stderr)
        header = ["model", "case", "L_relaxed", "L", "outage", "method"]
        rows = [[sc.model, _describe(sc, res), "infeasible", "", res.outage, res.method]]
        print_table(header, rows)
        if args.out:
            write_output(csv_text(metadata_lines("max-rank", sc), header, rows), args.out, "max-rank", sc, started)
        return EXIT_INFEASIBLE
    L = res.relaxed
    if sc.model in TWO_CELL_MODELS:
        ranks = (L, sc.l_other) if sc.l_other is not None else (L, L)
    else:
        ranks = (L,)
    outage = res.outage if res.outage is not None else outage_at(sc, ranks)
    header = ["model", "case", "L_relaxed", "L", "outage", "method"]
    rows = [[sc.model, _describe(sc, res), L, res.integer, outage, res.method]]
    print_table(header, rows)
    if args.out:
        write_output(csv_text(metadata_lines("max-rank", sc), header, rows), args.out, "max-rank", sc, started)
    return EXIT_OK


# ---------------------------------------------------------------- region


def boundary_for(sc: Scenario, grid: Sequence[float], threads: int) -> region.RegionBoundary:
    if sc.model == "wyner":
        return region.boundary_wyner(sc.qos, sc.g, sc.noise_power, sc.K, grid, sc.l_max, threads)
    if sc.model == "two-hetero":
        geom = sc.geometry
        if geom.n_cells != 2:
            raise InputError("two-hetero region needs exactly two cells")
        return region.boundary_heterogeneous(sc.qos, geom, sc.alpha, sc.noise_power, sc.K, grid, sc.l_max, threads, sc.quad_tol)
    raise InputError(f"region needs a two-cell model ({', '.join(TWO_CELL_MODELS)}), got {sc.model}")


def cmd_region(args, sc: Scenario, started: float) -> int:
    spec = args.grid or sc.grid or f"1:{fmt(sc.l_max)}:0.25"
    grid = parse_grid(spec)
    if grid[0] < 1:
        raise InputError("--grid must start at 1 or above")
    bnd = boundary_for(sc, grid, args.threads)
    rows = [[L1, L2] for L1, L2 in bnd.feasible_samples()]
    extra = {
        "grid": spec,
        "l_max": fmt(sc.l_max),
        "diagonal_crossing": fmt(bnd.diagonal) if bnd.diagonal is not None else "none",
    }
    if sc.model == "wyner":
        corner = region.equal_rank_wyner(sc.qos, sc.g, sc.noise_power, sc.K, sc.Nt)
        extra["equal_rank_closed_form"] = fmt(corner.relaxed) if corner.feasible else "infeasible"
    text = csv_text(metadata_lines("region", sc, extra), ["L1", "L2_max"], rows)
    write_output(text, args.out, "region", sc, started)
    if bnd.empty:
        print("empty region: infeasible at L=1", file=sys.stderr)
        return EXIT_INFEASIBLE
    return EXIT_OK


# ---------------------------------------------------------------- validate


def z_score(mc: float, analytic_value: float, trials: int) -> float:
    """Standardised gap under the analytic value as null binomial probability."""
    var = analytic_value * (1.0 - analytic_value) / trials
    if var <= 0.0:
        return 0.0 if mc == analytic_value else math.inf
    return (mc - analytic_value) / math.sqrt(var)


def cmd_validate(args, sc: Scenario, started: float) -> int:
    ranks = tuple(parse_list(args.ranks, int)) if args.ranks else sc.default_ranks()
    system = sc.system
    if len(ranks) != system.M:
        raise InputError(f"--ranks needs {system.M} values for model {sc.model}")
    if any(r < 1 or r > sc.Nt for r in ranks):
        raise InputError(f"--ranks must lie in [1, Nt={sc.Nt}]")
    if sc.model == "two-hetero" and system.M != 2:
        raise InputError("two-hetero analytics need exactly two cells")
    mc_system = system
    if args.corrupt_noise is not None:
        mc_system = sc.replace(noise_power=sc.noise_power * args.corrupt_noise).system
    tc = TrialConfig(mc_system, ranks, sc.trials, sc.seed)
    est = estimate_outage(tc, sc.eta, threads=args.threads)

    header = ["quantity", "analytic", "montecarlo", "se", "z"]
    rows = []
    for cell in range(system.M):
        for label, K, mc in (
            (f"outage_cell{cell + 1}", sc.K, est.per_cell[cell]),
            (f"single_user_cdf_cell{cell + 1}", 1, est.single_user[cell]),
        ):
            a = outage_at(sc, ranks, cell, K)
            se = est.binomial_se(mc, sc.trials)
            rows.append([label, a, mc, se, z_score(mc, a, sc.trials)])
    extra = {"ranks": " ".join(str(r) for r in ranks), "trials": sc.trials, "eta": fmt(sc.eta)}
    meta = metadata_lines("validate", sc, extra)
    sys.stdout.write("\n".join(meta) + "\n")
    print_table(header, rows)
    if args.out:
        write_output(csv_text(meta, header, rows), args.out, "validate", sc, started)
    worst = max(abs(r[4]) for r in rows)
    if worst > Z_FAIL:
        print(f"validation failed: max |z| = {fmt(worst)} > {fmt(Z_FAIL)}", file=sys.stderr)
        return EXIT_VALIDATION
    return EXIT_OK


# ---------------------------------------------------------------- sweep


def apply_sweep_value(sc: Scenario, name: str, value: float) -> Scenario:
    if name == "K":
        if int(value) != value or value < 1:
            raise InputError(f"K values must be positive integers, got {value}")
        return sc.replace(K=int(value))
    if name == "snr":
        return sc.replace(noise_power=1.0 / cfgmod.db_to_linear(value))
    return sc.replace(**{name: float(value)})


def cmd_sweep(args, sc: Scenario, started: float) -> int:
    if args.vary not in SWEEP_PARAMS:
        raise InputError(f"--vary must be one of {', '.join(SWEEP_PARAMS)}, got {args.vary!r}")
    if not args.values:
        raise InputError("--values is required")
    values = parse_list(args.values, float)
    models = parse_list(args.models, str) if args.models else [sc.model]
    for m in models:
        if m not in MODELS:
            raise InputError(f"unknown model {m!r}")
    rows = []
    for m in models:
        for v in values:
            point = apply_sweep_value(sc.replace(model=m), args.vary, v)
            problems = cfgmod.violations(point)
            if problems:
                raise InputError(f"{args.vary}={fmt(v)}: " + "; ".join(problems))
            res = max_rank_for(point)
            rows.append([m, v, res.relaxed if res.feasible else "infeasible", res.integer, res.method])
    extra = {"vary": args.vary, "values": ",".join(fmt(v) for v in values)}
    if args.vary == "snr":
        extra["units"] = "snr in dB, noise_power = 10^(-snr/10)"
    text = csv_text(metadata_lines("sweep", sc, extra), ["model", args.vary, "L_relaxed", "L", "method"], rows)
    write_output(text, args.out, "sweep", sc, started)
    return EXIT_OK


# ---------------------------------------------------------------- wiring


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", required=True, metavar="PATH", help="JSON scenario file")
    common.add_argument("--model", choices=MODELS, help="override the config's model")
    common.add_argument("--seed", type=int, help="override montecarlo.seed")
    common.add_argument("--trials", type=int, help="override montecarlo.trials")
    common.add_argument("--threads", type=int, default=os.cpu_count() or 1, help="worker threads")
    common.add_argument("--out", metavar="PATH", help="write CSV here (plus a .manifest.json)")

    parser = argparse.ArgumentParser(prog="obfrank", description=__doc__.split("\n\n")[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("max-rank", parents=[common], help="maximum achievable rank")
    p.add_argument("--l-other", type=float, help="fix the other cell's rank (two-cell models)")

    p = sub.add_parser("region", parents=[common], help="two-cell rank region boundary")
    p.add_argument("--grid", metavar="START:STOP:STEP", help="L1 grid (default 1:l_max:0.25)")

    p = sub.add_parser("validate", parents=[common], help="analytic vs Monte-Carlo outage")
    p.add_argument("--ranks", help="comma-separated integer ranks, one per cell")
    p.add_argument("--corrupt-noise", type=float, default=None, help=argparse.SUPPRESS)

    p = sub.add_parser("sweep", parents=[common], help="maximum rank vs one parameter")
    p.add_argument("--vary", required=True, help=f"one of {', '.join(SWEEP_PARAMS)}")
    p.add_argument("--values", required=True, help="comma-separated values (snr in dB)")
    p.add_argument("--models", help="comma-separated models (default: the config's)")
    return parser


COMMANDS = {
    "max-rank": cmd_max_rank,
    "region": cmd_region,
    "validate": cmd_validate,
    "sweep": cmd_sweep,
}


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_INPUT if exc.code else EXIT_OK
    started = time.perf_counter()
    try:
        sc = cfgmod.load(args.config)
        overrides = {}
        if args.model:
            overrides["model"] = args.model
        if args.seed is not None:
            overrides["seed"] = args.seed
        if args.trials is not None:
            overrides["trials"] = args.trials
        if getattr(args, "l_other", None) is not None:
            overrides["l_other"] = args.l_other
        if overrides:
            sc = sc.replace(**overrides)
            problems = cfgmod.violations(sc)
            if problems:
                raise ConfigError(problems)
        if args.threads < 1:
            raise InputError("--threads must be >= 1")
        return COMMANDS[args.command](args, sc, started)
    except (ConfigError, InputError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
