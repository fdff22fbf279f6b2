"""Solver dispatch, sweeps and benchmarks behind the command-line interface."""

from __future__ import annotations

import csv
import io
import time
from concurrent.futures import ProcessPoolExecutor

import numpy as np

from .analytics import Association, average_sinr, no_irs_sinr
from .errors import InvalidArgumentError, IrsNetError
from .geometry import LinkGains, Scenario, build_link_gains, dbm_to_watts, scenario_from_dict, scenario_to_dict, synthetic_gains, to_db
from .heuristics import (
    alternating_optimization_p2,
    enumerate_p2,
    nearest_association,
    scatter_association,
    sequential_update_p1,
    sequential_update_p2,
    successive_refinement_p1,
)
from .milp import build_milp, enumerate_p1, solve_bb
from .power import optimal_common_sinr, optimal_powers

SOLVERS = {
    "p1": ("bb", "enum", "refine", "seq", "nearest", "scatter"),
    "p2": ("enum", "seq", "seq-simplified", "ao", "nearest", "scatter"),
}
CSV_COLUMNS = ("sweep_value", "solver", "common_sinr_db", "per_user_sinrs_db", "status")


def check_solver(problem: str, solver: str) -> None:
    if problem not in SOLVERS:
        raise InvalidArgumentError(f"unknown problem {problem!r}; choose p1 or p2")
    if solver not in SOLVERS[problem]:
        raise InvalidArgumentError(f"solver {solver!r} is not available for {problem}; choose from {SOLVERS[problem]}")


def _db_list(x):
    return [float(v) for v in to_db(np.asarray(x, dtype=float))]


def solve(scenario: Scenario, problem: str, solver: str, M: int | None = None, gains: LinkGains | None = None) -> dict:
    """Run one solver and return the result record (SINRs in dB)."""
    check_solver(problem, solver)
    M = scenario.num_elements if M is None else M
    gains = gains or build_link_gains(scenario)
    pm, s2 = scenario.p_max, scenario.noise_power
    K, J = scenario.K, scenario.J
    init = nearest_association(scenario)
    extra = {}
    t0 = time.perf_counter()
    if problem == "p1":
        if solver == "bb":
            sol = solve_bb(build_milp(gains, M, pm, s2))
            assoc = sol.assoc
            extra = {"nodes": sol.nodes_explored, "proof_gap": sol.proof_gap}
        elif solver == "enum":
            sol = enumerate_p1(gains, M, pm, s2)
            assoc = sol.assoc
            extra = {"states": sol.nodes_explored}
        elif solver == "refine":
            assoc, trace = successive_refinement_p1(init, gains, M, pm, s2)
            extra = {"trace": trace.to_json()}
        elif solver == "seq":
            assoc, _ = sequential_update_p1(init, gains, M, pm, s2)
        elif solver == "nearest":
            assoc = init
        else:
            assoc = scatter_association(J, K)
        powers = np.full(K, pm)
    else:
        if solver == "enum":
            assoc, p, _ = enumerate_p2(gains, M, pm, s2)
        elif solver in ("seq", "seq-simplified"):
            assoc, p, _ = sequential_update_p2(init, gains, M, pm, s2, simplified=solver == "seq-simplified")
        elif solver == "ao":
            assoc, p, _, updates = alternating_optimization_p2(init, gains, M, pm, s2)
            extra = {"num_lambda_updates": updates}
        else:
            assoc = init if solver == "nearest" else scatter_association(J, K)
            p = optimal_powers(assoc, gains, M, s2, pm)
        powers = p.p
    wall = time.perf_counter() - t0
    rep = average_sinr(assoc, powers, gains, M, s2)
    out = {
        "schema": 1,
        "problem": problem,
        "solver": solver,
        "M": M,
        "assoc": assoc.lam.astype(int).tolist(),
        "powers_w": [float(v) for v in powers],
        "per_user_sinrs_db": _db_list(rep.per_user),
        "common_sinr_db": float(to_db(rep.common)),
        "bottleneck": rep.bottleneck,
        "wall_time_s": wall,
    }
    out.update(extra)
    return out


# --- sweeps ----------------------------------------------------------------

def parse_grid(text: str) -> list[float]:
    """Comma-separated values or ``start:stop:step`` (stop inclusive)."""
    vals: list[float] = []
    for part in text.split(","):
        part = part.strip()
        if not part:
            continue
        if ":" in part:
            a, b, c = (float(x) for x in part.split(":"))
            if c <= 0:
                raise InvalidArgumentError(f"grid step must be positive in {part!r}")
            vals.extend(np.arange(a, b + c / 2, c).tolist())
        else:
            vals.append(float(part))
    if not vals:
        raise InvalidArgumentError("grid is empty")
    if any(b <= a for a, b in zip(vals, vals[1:])):
        raise InvalidArgumentError("grid must be strictly ascending")
    return vals


def _sweep_point(task):
    scen_dict, problem, solver, kind, value = task
    sc = scenario_from_dict(scen_dict)
    if kind == "M":
        M = int(round(value))
        if M != value:
            raise InvalidArgumentError(f"M grid values must be integers, got {value}")
        sc = sc.with_params(num_elements=M)
    else:
        sc = sc.with_params(p_max=float(dbm_to_watts(value)))
    try:
        res = solve(sc, problem, solver)
        return {"sweep_value": value, "solver": solver, "common_sinr_db": res["common_sinr_db"],
                "per_user_sinrs_db": res["per_user_sinrs_db"], "status": "ok"}
    except IrsNetError as exc:
        return {"sweep_value": value, "solver": solver, "common_sinr_db": None,
                "per_user_sinrs_db": None, "status": f"error: {type(exc).__name__}: {exc}"}


def sweep(scenario: Scenario, problem: str, solvers, grid, kind: str = "M", workers: int = 1) -> list[dict]:
    """Evaluate each solver at each grid value; failures become status rows."""
    if kind not in ("M", "p_max_dbm"):
        raise InvalidArgumentError("sweep kind must be 'M' or 'p_max_dbm'")
    for s in solvers:
        check_solver(problem, s)
    d = scenario_to_dict(scenario)
    tasks = [(d, problem, s, kind, float(v)) for v in grid for s in solvers]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as ex:
            rows = list(ex.map(_sweep_point, tasks))
    else:
        rows = [_sweep_point(t) for t in tasks]
    order = {s: i for i, s in enumerate(solvers)}
    rows.sort(key=lambda r: (r["sweep_value"], order[r["solver"]]))
    return rows


# two-user, single-IRS example network; user 2's gains are our own choice
TWO_USER_NOISE = 1.0
TWO_USER_POWER = 10.0


def two_user_gains(example: int) -> LinkGains:
    own = {1: 8.0, 2: 1.0}[example]
    return synthetic_gains([[4.0, 2.0], [2.0, 4.0]], [[own], [3.0]], [[1.0, 1.0]])


TWO_USER_CURVES = ("no-irs", "ex1-scatter", "ex1-beam", "ex2-scatter", "ex2-beam")


def two_user_rows(grid) -> list[dict]:
    """User SINRs of the two-user example at every M in ``grid``."""
    rows = []
    p = np.full(2, TWO_USER_POWER)
    for v in grid:
        M = int(v)
        if M != v or M < 0:
            raise InvalidArgumentError("M grid values must be non-negative integers")
        for curve in TWO_USER_CURVES:
            if curve == "no-irs":
                rep = no_irs_sinr(p, two_user_gains(1), TWO_USER_NOISE)
            else:
                ex = int(curve[2])
                lam = np.array([[1, 0]]) if curve.endswith("beam") else np.zeros((1, 2))
                rep = average_sinr(Association(lam), p, two_user_gains(ex), M, TWO_USER_NOISE)
            rows.append({"sweep_value": v, "solver": curve, "common_sinr_db": float(to_db(rep.per_user[0])),
                         "per_user_sinrs_db": _db_list(rep.per_user), "status": "ok"})
    return rows


def rows_to_csv(rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_COLUMNS)
    for r in rows:
        per = r["per_user_sinrs_db"]
        w.writerow([
            repr(float(r["sweep_value"])),
            r["solver"],
            "" if r["common_sinr_db"] is None else repr(r["common_sinr_db"]),
            "" if per is None else ";".join(repr(x) for x in per),
            r["status"],
        ])
    return buf.getvalue()


# --- benchmark -------------------------------------------------------------

def bench(scenario: Scenario, j_list, M: int | None = None) -> list[dict]:
    """BB versus exhaustive enumeration on the first ``J`` IRSs of ``scenario``."""
    M = scenario.num_elements if M is None else M
    rows = []
    for J in j_list:
        if not 0 <= J <= scenario.J:
            raise InvalidArgumentError(f"J={J} outside 0..{scenario.J}")
        sc = scenario.with_irs_subset(range(J))
        g = build_link_gains(sc)
        t0 = time.perf_counter()
        bb = solve_bb(build_milp(g, M, sc.p_max, sc.noise_power))
        t1 = time.perf_counter()
        en = enumerate_p1(g, M, sc.p_max, sc.noise_power)
        t2 = time.perf_counter()
        rows.append({
            "J": J,
            "bb_nodes": bb.nodes_explored,
            "bb_time_s": t1 - t0,
            "enum_states": (sc.K + 1) ** J,
            "enum_time_s": t2 - t1,
            "same_optimum": bool(abs(bb.common_sinr - en.common_sinr) <= 1e-9 * abs(en.common_sinr)),
            "bb_nodes_below_states": bb.nodes_explored < (sc.K + 1) ** J,
        })
    return rows
