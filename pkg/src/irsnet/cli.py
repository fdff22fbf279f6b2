"""``irsnet`` command-line interface.

Exit codes: 0 success, 1 validation failure, 2 usage or input error,
3 problem too large for exhaustive search.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .errors import CapacityError, InvalidArgumentError, IrsNetError
from .experiments import SOLVERS, bench, two_user_rows, parse_grid, rows_to_csv, solve, sweep
from .geometry import build_link_gains, dump_scenario, load_scenario
from .heuristics import nearest_association
from .layouts import LAYOUTS, make_scenario
from .montecarlo import validation_report

EXIT_OK, EXIT_VALIDATION, EXIT_USAGE, EXIT_CAPACITY = 0, 1, 2, 3

class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_USAGE)

def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="irsnet", description="Multi-IRS aided downlink: SINR analytics and association solvers.")
    p.add_argument("--seed", type=int, default=0, help="seed for layouts and Monte-Carlo sampling")
    p.add_argument("--workers", type=int, default=1, help="worker processes for sweeps")
    p.add_argument("--out", type=Path, default=None, help="output file (default: stdout)")
    # the global flags are accepted after the subcommand too
    common = argparse.ArgumentParser(add_help=False, argument_default=argparse.SUPPRESS)
    common.add_argument("--seed", type=int)
    common.add_argument("--workers", type=int)
    common.add_argument("--out", type=Path)
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    g = sub.add_parser("generate", parents=[common], help="write a scenario JSON")
    g.add_argument("--k", type=int, default=4, help="number of BS/user pairs")
    g.add_argument("--j", type=int, default=30, help="number of IRSs")
    g.add_argument("--layout", choices=LAYOUTS, default="paper-fig3")
    g.add_argument("--M", type=int, default=100, help="reflecting elements per IRS")
    g.add_argument("--p-max-dbm", type=float, default=40.0)

    v = sub.add_parser("validate", parents=[common], help="Monte-Carlo check of the closed forms")
    v.add_argument("scenario", type=Path)
    v.add_argument("--M", type=int, default=None)
    v.add_argument("--trials", type=int, default=100_000)
    v.add_argument("--uniform", action="store_true", help="independent phases for every non-associated pair")

    s = sub.add_parser("solve", parents=[common], help="run one solver")
    s.add_argument("scenario", type=Path)
    s.add_argument("--problem", choices=sorted(SOLVERS), default="p1")
    s.add_argument("--solver", default="bb")
    s.add_argument("--M", type=int, default=None)

    w = sub.add_parser("sweep", parents=[common], help="common SINR over an M or p_max grid (CSV)")
    w.add_argument("scenario", type=Path, nargs="?", help="not needed with --two-user")
    w.add_argument("--problem", choices=sorted(SOLVERS), default="p1")
    w.add_argument("--solvers", default="bb,refine,nearest,scatter")
    grid = w.add_mutually_exclusive_group(required=True)
    grid.add_argument("--M-grid", help="e.g. 0,100,200 or 0:1000:100")
    grid.add_argument("--pmax-grid", help="p_max values in dBm")
    w.add_argument("--two-user", action="store_true", help="two-user single-IRS example instead of a scenario")

    b = sub.add_parser("bench", parents=[common], help="BB versus enumeration node counts and times")
    b.add_argument("scenario", type=Path)
    b.add_argument("--J-list", default="8,10,12")
    b.add_argument("--M", type=int, default=None)
    return p

def _emit(text: str, out: Path | None) -> None:
    if out is None:
        sys.stdout.write(text)
    else:
        try:
            out.write_text(text)
        except OSError as exc:
            raise InvalidArgumentError(f"cannot write {out}: {exc.strerror}") from exc

def _load(path: Path):
    try:
        return load_scenario(path)
    except OSError as exc:
        raise InvalidArgumentError(f"cannot read scenario {path}: {exc.strerror}") from exc
    except json.JSONDecodeError as exc:
        raise InvalidArgumentError(f"{path} is not valid JSON: {exc}") from exc

def _json(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True) + "\n"

def run(args) -> int:
    if args.workers < 1:
        raise InvalidArgumentError("--workers must be at least 1")
    if args.command == "generate":
        sc = make_scenario(args.layout, args.k, args.j, args.seed, args.M, args.p_max_dbm)
        _emit(dump_scenario(sc), args.out)
        return EXIT_OK

    if args.command == "validate":
        sc = _load(args.scenario)
        M = sc.num_elements if args.M is None else args.M
        if M < 1:
            raise InvalidArgumentError("validation needs M >= 1")
        g = build_link_gains(sc)
        rep = validation_report(nearest_association(sc), sc.p_max, g, M, sc.noise_power, args.trials, args.seed, args.uniform)
        _emit(_json(rep), args.out)
        return EXIT_VALIDATION if rep["status"] == "fail" else EXIT_OK

    if args.command == "solve":
        sc = _load(args.scenario)
        res = solve(sc, args.problem, args.solver, args.M)
        _emit(_json(res), args.out)
        return EXIT_OK

    if args.command == "sweep":
        if args.two_user:
            if args.M_grid is None:
                raise InvalidArgumentError("--two-user sweeps over --M-grid")
            rows = two_user_rows(parse_grid(args.M_grid))
        else:
            if args.scenario is None:
                raise InvalidArgumentError("sweep needs a scenario file unless --two-user is given")
            sc = _load(args.scenario)
            solvers = [s.strip() for s in args.solvers.split(",") if s.strip()]
            if not solvers:
                raise InvalidArgumentError("no solvers given")
            if args.M_grid is not None:
                rows = sweep(sc, args.problem, solvers, parse_grid(args.M_grid), "M", args.workers)
            else:
                rows = sweep(sc, args.problem, solvers, parse_grid(args.pmax_grid), "p_max_dbm", args.workers)
        _emit(rows_to_csv(rows), args.out)
        return EXIT_OK

    if args.command == "bench":
        sc = _load(args.scenario)
        j_list = [int(x) for x in parse_grid(args.J_list)]
        rows = bench(sc, j_list, args.M)
        _emit(_json({"schema": 1, "rows": rows}), args.out)
        return EXIT_OK if all(r["bb_nodes_below_states"] and r["same_optimum"] for r in rows) else EXIT_VALIDATION
    raise InvalidArgumentError(f"unknown command {args.command}")

def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        # --help exits 0, usage errors exit 2
        return int(exc.code or 0)
    try:
        return run(args)
    except CapacityError as exc:
        print(f"irsnet: {exc}", file=sys.stderr)
        return EXIT_CAPACITY
    except (InvalidArgumentError, ValueError) as exc:
        print(f"irsnet: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except IrsNetError as exc:
        print(f"irsnet: {exc}", file=sys.stderr)
        return EXIT_USAGE

if __name__ == "__main__":
    sys.exit(main())
