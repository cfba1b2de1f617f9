"""Command line for oligofair: validate, generate, solve and report.

Exit codes: 0 success, 1 validation failure, 2 infeasible, 3 limits reached.
"""

from __future__ import annotations

import argparse
import json
import logging
import math
import sys
from pathlib import Path

from .errors import GameError, OligofairError, ParseError, SolverError
from .game import (GameOutcome, StatusQuo, compute_status_quo, initial_nash_grids, outcome_from_solution,
                   solve_nash, solve_social_welfare, true_nash_objective)
from .instance import (SyntheticDims, dumps_instance, generate_synthetic, load_instance,
                       restrict_to_incumbents, validate_instance)
from .model.builder import build_model
from .solver.mps import export_mps, import_solution
from .solver.types import SolverConfig

log = logging.getLogger("oligofair")

EXIT_OK, EXIT_INVALID, EXIT_INFEASIBLE, EXIT_LIMIT = 0, 1, 2, 3

_INFEASIBLE_CODES = {"INFEASIBLE", "STATUS_QUO_INFEASIBLE", "NO_BARGAINING_SOLUTION",
                     "EMPTY_BARGAINING_RANGE"}
_LIMIT_CODES = {"NO_SOLUTION", "LP_ITERATION_LIMIT", "TOO_LARGE"}
_LIMIT_STATUSES = {"node-limit", "time-limit"}


def parse_dims(text):
    """``"2x4x6"`` (firms x customers x periods) or ``"firms=2,periods=6,..."``."""
    text = text.strip()
    if "=" not in text:
        parts = [int(v) for v in text.lower().split("x")]
        if len(parts) != 3:
            raise argparse.ArgumentTypeError("expected FxCxP")
        return SyntheticDims(firms=parts[0], customers=parts[1], periods=parts[2])
    fields = {}
    for item in text.split(","):
        key, _, val = item.partition("=")
        key = key.strip()
        if key not in SyntheticDims.__dataclass_fields__:
            raise argparse.ArgumentTypeError(f"unknown dimension {key!r}")
        if key == "durations":
            fields[key] = tuple(int(v) for v in val.split("/"))
        elif key in ("free_fraction",):
            fields[key] = float(val)
        elif key == "term_range":
            lo, hi = val.split("/")
            fields[key] = (float(lo), float(hi))
        else:
            fields[key] = int(val)
    return SyntheticDims(**fields)


def _write(path, text):
    if path is None or path == "-":
        sys.stdout.write(text)
    else:
        Path(path).write_text(text)


def _config(args):
    return SolverConfig(
        time_limit=args.time_limit if args.time_limit is not None else math.inf,
        node_limit=args.node_limit if args.node_limit is not None else SolverConfig.node_limit,
        workers=args.workers)


# -- commands ----------------------------------------------------------------------

def cmd_validate(args):
    inst = load_instance(args.instance)
    problems = validate_instance(inst)
    for v in problems:
        print(f"{v.code} {v.location} {v.message}".rstrip())
    if problems:
        return EXIT_INVALID
    print(f"ok: {len(inst.firms)} firms, {len(inst.customers)} customers, "
          f"{inst.n_periods} periods")
    return EXIT_OK


def cmd_generate(args):
    inst = generate_synthetic(args.seed, args.dims)
    _write(args.out, dumps_instance(inst, indent=2) + "\n")
    return EXIT_OK


def _model_for(inst, mode, sq=None, grids=None):
    """Built (model, builder, instance the outcome refers to) for one mode."""
    if mode == "sq":
        r = restrict_to_incumbents(inst)
        fixed = {c: r.firm_index(cust.incumbent_firm) for c, cust in enumerate(r.customers)}
        model, b = build_model(r, "status-quo", fixed_firms=fixed, name="status_quo")
        return model, b, r
    if mode == "fsw":
        model, b = build_model(inst, "social-welfare", name="social_welfare")
        return model, b, inst
    model, b = build_model(inst, "nash", status_quo=sq.profits, grids=grids, name="nash")
    return model, b, inst


def cmd_solve(args):
    inst = load_instance(args.instance)
    problems = validate_instance(inst)
    if problems:
        for v in problems:
            print(f"{v.code} {v.location} {v.message}".rstrip(), file=sys.stderr)
        return EXIT_INVALID
    cfg = _config(args)
    solver = args.solver
    sq = fsw = grids = None
    if args.welfare:
        fsw = GameOutcome.from_json(Path(args.welfare).read_text())
    if args.status_quo:
        sq_out = GameOutcome.from_json(Path(args.status_quo).read_text())
        sq = StatusQuo(dict(sq_out.profits), sq_out, restrict_to_incumbents(inst))
    elif args.mode in ("fsw", "flns"):
        sq = compute_status_quo(inst, cfg, solver)
    if args.mode == "flns" and (args.mps_out or args.import_solution):
        if fsw is None:
            fsw = solve_social_welfare(inst, cfg, solver, status_quo=sq)
        grids, _, _ = initial_nash_grids(inst, sq, fsw, args.grid)

    if args.mps_out or args.import_solution:
        model, builder, ref_inst = _model_for(inst, args.mode, sq, grids)
        if args.mps_out:
            Path(args.mps_out).write_text(export_mps(model, sos=args.mps_sos))
            log.info("wrote %s (%d columns, %d rows)", args.mps_out, model.n_vars, model.n_rows)
            if args.export_only:
                return EXIT_OK
        if args.import_solution:
            sol = import_solution(Path(args.import_solution).read_text(), model, cfg)
            if sol.status != "accepted":
                for v in sol.violations[:20]:
                    print(f"violation {v}", file=sys.stderr)
                return EXIT_INVALID
            out = outcome_from_solution(ref_inst, builder, sol, args.mode,
                                        {"source": str(args.import_solution)})
            if sq is not None:
                out.status_quo = dict(sq.profits)
            if args.mode == "sq":
                out.status_quo = dict(out.profits)
            if args.mode == "flns":
                out.diagnostics["grids"] = {f: g.tolist() for f, g in grids.items()}
                out.diagnostics["psi"] = true_nash_objective(
                    out.profits, sq.profits, inst.game.negotiation_power, strict=False)[1]
            return _finish(args, out)

    if args.mode == "sq":
        out = compute_status_quo(inst, cfg, solver).outcome
    elif args.mode == "fsw":
        out = solve_social_welfare(inst, cfg, solver, status_quo=sq)
    else:
        out = solve_nash(inst, sq, fsw, cfg, grid_size=args.grid, refine_rounds=args.refine,
                         solver=solver)
    return _finish(args, out)


def _finish(args, out):
    _write(args.out, out.to_json() + "\n")
    shown = ", ".join(f"{f}={p:.6g}" for f, p in out.profits.items())
    print(f"{out.mode}: total profit {out.total_profit:.10g} ({shown})", file=sys.stderr)
    if out.diagnostics.get("status") in _LIMIT_STATUSES:
        print(f"limit reached: {out.diagnostics['status']}", file=sys.stderr)
        return EXIT_LIMIT
    return EXIT_OK


def cmd_report(args):
    from .report import market_report

    out = GameOutcome.from_json(Path(args.outcome).read_text())
    sq = None
    if args.status_quo:
        sq = GameOutcome.from_json(Path(args.status_quo).read_text()).profits
    rep = market_report(out, sq, top=args.top)
    if args.format == "text":
        _write(args.out, rep.to_text())
        return EXIT_OK
    if not args.out:
        print("--out DIR is required for csv and svg output", file=sys.stderr)
        return EXIT_INVALID
    folder = Path(args.out)
    folder.mkdir(parents=True, exist_ok=True)
    files = rep.csv_files() if args.format == "csv" else rep.svg_files()
    for name, text in files.items():
        (folder / name).write_text(text)
    print("\n".join(str(folder / n) for n in files))
    return EXIT_OK


# -- entry -------------------------------------------------------------------------

def build_parser():
    p = argparse.ArgumentParser(prog="oligofair", description=__doc__.splitlines()[0])
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("validate", help="check an instance document")
    s.add_argument("instance")
    s.set_defaults(func=cmd_validate)

    s = sub.add_parser("generate", help="write a synthetic instance")
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--dims", type=parse_dims, default=SyntheticDims())
    s.add_argument("--out", "-o")
    s.set_defaults(func=cmd_generate)

    s = sub.add_parser("solve", help="solve one fairness scheme")
    s.add_argument("instance")
    s.add_argument("--mode", choices=("sq", "fsw", "flns"), required=True)
    s.add_argument("--grid", type=int, default=None, help="profit grid points per firm")
    s.add_argument("--refine", type=int, default=None, help="grid refinement rounds")
    s.add_argument("--mps-out", help="write the model as MPS")
    s.add_argument("--mps-sos", choices=("native", "binary"), default="native",
                   help="write SOS2 sets natively or as segment binaries")
    s.add_argument("--export-only", action="store_true", help="stop after --mps-out")
    s.add_argument("--import-solution", help="'name value' file to verify instead of solving")
    s.add_argument("--status-quo", help="status-quo outcome JSON to reuse instead of solving")
    s.add_argument("--welfare", help="social-welfare outcome JSON to reuse for flns grids")
    s.add_argument("--solver", choices=("embedded", "external"), default="embedded")
    s.add_argument("--time-limit", type=float)
    s.add_argument("--node-limit", type=int)
    s.add_argument("--workers", type=int, default=1)
    s.add_argument("--out", "-o", help="outcome JSON path (default stdout)")
    s.set_defaults(func=cmd_solve)

    s = sub.add_parser("report", help="render reports from an outcome")
    s.add_argument("outcome")
    s.add_argument("--top", type=int, default=10)
    s.add_argument("--format", choices=("text", "csv", "svg"), default="text")
    s.add_argument("--status-quo", help="status-quo outcome JSON (default: stored profits)")
    s.add_argument("--out", "-o", help="file for text, directory for csv/svg")
    s.set_defaults(func=cmd_report)
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except ParseError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except (GameError, SolverError, OligofairError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        if exc.code in _INFEASIBLE_CODES:
            return EXIT_INFEASIBLE
        if exc.code in _LIMIT_CODES:
            return EXIT_LIMIT
        return EXIT_INVALID
    except (OSError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
