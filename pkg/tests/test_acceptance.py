"""Acceptance suite: one test per criterion, each recording a pass/fail line.

Run with ``pytest tests/test_acceptance.py`` or directly as a script; the
lines are printed in the terminal summary.
"""

import math
import sys
import time
from contextlib import contextmanager

import numpy as np
import pytest

from conftest import ACCEPTANCE_LINES, two_user_gains, random_synthetic
from irsnet.analytics import Association, average_sinr, common_sinr_p1, crossover_M_network, effective_signal_powers, interference_matrix
from irsnet.geometry import build_link_gains, dbm_to_watts
from irsnet.heuristics import (
    alternating_optimization_p2,
    enumerate_p2,
    nearest_association,
    scatter_association,
    sequential_update_p1,
    sequential_update_p2,
    successive_refinement_p1,
    switch_delta,
    switch_lower_bound,
)
from irsnet.layouts import make_scenario
from irsnet.milp import build_milp, enumerate_p1, solve_bb
from irsnet.montecarlo import SCATTER_TOL, SIGNAL_TOL, INTERFERENCE_TOL, validation_checks
from irsnet.power import optimal_common_sinr, optimal_powers


@contextmanager
def criterion(n, text):
    info = {}
    try:
        yield info
    except BaseException as exc:
        msg = str(exc).splitlines()[0][:160] if str(exc) else ""
        ACCEPTANCE_LINES.append(f"[FAIL] criterion {n}: {text} ({type(exc).__name__}: {msg})")
        raise
    detail = ", ".join(f"{k}={v}" for k, v in info.items())
    ACCEPTANCE_LINES.append(f"[PASS] criterion {n}: {text}" + (f" ({detail})" if detail else ""))


def _gamma1(own, lam, M):
    return average_sinr(np.asarray(lam, float), [10.0, 10.0], two_user_gains(own), M, 1.0).per_user[0]


def test_01_two_user_exact():
    with criterion(1, "two-user example closed forms") as info:
        base = _gamma1(8.0, [[0, 0]], 0)
        assert abs(base - 40 / 21) < 1e-12
        Ms = np.arange(0, 10_001)
        ex1 = np.array([_gamma1(8.0, [[0, 0]], M) for M in Ms[::10]])
        assert np.all(np.diff(ex1) > 0) and np.all(ex1 < 8 / 3)
        assert abs(_gamma1(8.0, [[0, 0]], 10**6) / (8 / 3) - 1) < 1e-3
        ex2 = np.array([_gamma1(1.0, [[0, 0]], M) for M in Ms[::10]])
        assert np.all(np.diff(ex2) < 0) and np.all(ex2 > 1 / 3)
        assert abs(_gamma1(1.0, [[0, 0]], 10**6) / (1 / 3) - 1) < 1e-3
        beam = np.array([_gamma1(1.0, [[1, 0]], M) for M in range(0, 200)])
        d = np.diff(beam)
        turn = int(np.argmax(d > 0))
        assert turn > 0 and np.all(d[:turn] < 0) and np.all(d[turn:] > 0)
        first = min(M for M in range(1, 200) if beam[M] >= 40 / 21)
        assert first == 5
        info["crossover_M"] = first


def test_02_monte_carlo():
    with criterion(2, "Monte-Carlo matches closed forms on random K=3, J=5") as info:
        t0 = time.perf_counter()
        sc = make_scenario("random", 3, 5, seed=3)
        g = build_link_gains(sc)
        lam = nearest_association(sc)
        p = np.full(3, sc.p_max)
        c64 = validation_checks(lam, p, g, 64, sc.noise_power, 100_000, seed=0)
        c256 = validation_checks(lam, p, g, 256, sc.noise_power, 100_000, seed=1)
        elapsed = time.perf_counter() - t0
        intf = [c for c in c64 if c.name.startswith("interference")]
        sig = [c for c in c256 if c.name.startswith("signal")]
        scat = [c for c in c64 + c256 if c.name.startswith("scatter")]
        assert len(intf) == 3 and len(sig) == 3 and len(scat) == 2
        assert all(c.rel_err <= INTERFERENCE_TOL for c in intf)
        assert all(c.rel_err <= SIGNAL_TOL for c in sig)
        assert all(c.rel_err <= SCATTER_TOL for c in scat)
        assert elapsed <= 120.0
        info["max_interference_err"] = f"{max(c.rel_err for c in intf):.4f}"
        info["max_signal_err"] = f"{max(c.rel_err for c in sig):.4f}"
        info["max_scatter_err"] = f"{max(c.rel_err for c in scat):.4f}"
        info["seconds"] = f"{elapsed:.1f}"


def test_03_bb_optimality():
    with criterion(3, "BB equals enumeration on 50 instances, nodes < (K+1)^J") as info:
        worst_nodes = 0
        for i in range(50):
            J = 4 + i % 5
            sc = make_scenario("random", 3, J, seed=100 + i)
            g = build_link_gains(sc)
            bb = solve_bb(build_milp(g, 100, sc.p_max, sc.noise_power))
            en = enumerate_p1(g, 100, sc.p_max, sc.noise_power)
            assert abs(bb.common_sinr - en.common_sinr) <= 1e-9 * en.common_sinr
            assert bb.nodes_explored < 4**J
            worst_nodes = max(worst_nodes, bb.nodes_explored)
        info["max_nodes"] = worst_nodes


def _grid_best(sig, nu, noise, p_max, K, steps=200, chunk=1 << 20):
    levels = np.arange(steps + 1) * (p_max / steps)
    total = (steps + 1) ** K
    best = 0.0
    for start in range(0, total, chunk):
        idx = np.arange(start, min(total, start + chunk))
        P = np.stack([levels[(idx // (steps + 1) ** d) % (steps + 1)] for d in range(K)], axis=1)
        P = P[P.max(axis=1) > 0]
        s = P * sig / (noise + P @ nu)
        best = max(best, float(s.min(axis=1).max()))
    return best


def test_04_power_certificate():
    with criterion(4, "power control certificates on 100 instances, grid search for K<=3") as info:
        rng = np.random.default_rng(4)
        worst_gain, worst_spread = -np.inf, 0.0
        for i in range(100):
            K = 2 + i % 3
            J = int(rng.integers(K, 2 * K + 1))
            sc = make_scenario("random", K, J, seed=400 + i)
            g = build_link_gains(sc)
            lam = Association.from_assignment(rng.integers(-1, K, J), K)
            M = int(rng.integers(10, 500))
            pa = optimal_powers(lam, g, M, sc.noise_power, sc.p_max)
            gam, _ = optimal_common_sinr(lam, g, M, sc.noise_power, sc.p_max)
            s = average_sinr(lam, pa.p, g, M, sc.noise_power).per_user
            spread = (s.max() - s.min()) / s.min()
            worst_spread = max(worst_spread, spread)
            assert spread < 1e-9
            assert int(np.sum(pa.p == sc.p_max)) == 1
            assert int(np.sum(np.isclose(pa.p, sc.p_max, rtol=1e-9, atol=0))) == 1
            assert abs(s.min() - gam) <= 1e-9 * gam
            if K <= 3:
                sig = effective_signal_powers(lam, g, M)
                best = _grid_best(sig, interference_matrix(g, M), sc.noise_power, sc.p_max, K)
                assert best <= gam * (1 + 1e-3)
                worst_gain = max(worst_gain, best / gam - 1)
        info["max_spread"] = f"{worst_spread:.1e}"
        info["grid_best_over_optimum"] = f"{worst_gain:+.1e}"


def test_05_ao_single_update():
    with criterion(5, "AO makes at most one association update (100 instances x 5 inits)") as info:
        rng = np.random.default_rng(5)
        counts = {0: 0, 1: 0}
        for i in range(100):
            if i % 2 == 0:
                K, J = 3, int(rng.integers(3, 7))
                sc = make_scenario("random", K, J, seed=500 + i)
                g, pm, s2, M = build_link_gains(sc), sc.p_max, sc.noise_power, 100
                inits = [nearest_association(sc)]
            else:
                K, J = int(rng.integers(2, 4)), int(rng.integers(2, 6))
                g, pm, s2, M = random_synthetic(rng, K, J), 1.0, 0.05, int(rng.integers(2, 200))
                inits = [Association.from_assignment(rng.integers(-1, K, J), K)]
            inits.append(Association.from_assignment([0] * J, K))
            inits.append(Association.from_assignment([K - 1] * J, K))
            inits.append(scatter_association(J, K))
            while len(inits) < 5:
                inits.append(Association.from_assignment(rng.integers(-1, K, J), K))
            for init in inits:
                _, _, _, updates = alternating_optimization_p2(init, g, M, pm, s2)
                assert updates <= 1
                counts[updates] += 1
        info["runs_with_0_updates"] = counts[0]
        info["runs_with_1_update"] = counts[1]


def test_06_switch_signs():
    with criterion(6, "single-IRS switch helps recipient and hurts donor (10^4 trials)") as info:
        rng = np.random.default_rng(6)
        tight = np.inf
        for t in range(10_000):
            M = (2, 10, 100)[t % 3]
            K, J = int(rng.integers(2, 5)), int(rng.integers(1, 6))
            g = random_synthetic(rng, K, J, spread=3.0)
            a = rng.integers(-1, K, J)
            j0 = int(rng.integers(0, J))
            kf = int(rng.integers(0, K))
            a[j0] = kf
            kt = int((kf + rng.integers(1, K)) % K)
            d_to, d_from = switch_delta(Association.from_assignment(a, K), g, M, j0, kf, kt)
            lb = switch_lower_bound(g, M, j0, kt)
            assert d_to > 0 and d_from < 0 and d_to > lb > 0
            tight = min(tight, d_to / lb)
        info["min_delta_over_bound"] = f"{tight:.3f}"


@pytest.fixture(scope="module")
def clustered():
    sc = make_scenario("paper-fig3", 4, 8, seed=0, M=100)
    return sc, build_link_gains(sc)


def test_07_heuristic_quality(clustered):
    with criterion(7, "heuristics on the 4-user, 8-IRS clustered layout") as info:
        sc, g = clustered
        pm, s2 = sc.p_max, sc.noise_power
        init = nearest_association(sc)
        worst_ref, worst_p2 = 0.0, 0.0
        for M in (100, 500, 1000):
            bb = solve_bb(build_milp(g, M, pm, s2)).common_sinr
            ref = common_sinr_p1(successive_refinement_p1(init, g, M, pm, s2)[0], g, M, pm, s2)
            _, seq = sequential_update_p1(init, g, M, pm, s2)
            near = common_sinr_p1(init, g, M, pm, s2)
            assert abs(ref - bb) <= 1e-6 * bb
            assert near * (1 - 1e-12) <= seq <= ref * (1 + 1e-12)
            worst_ref = max(worst_ref, abs(ref - bb) / bb)
        for J in range(4, 9):
            sub = sc.with_irs_subset(range(J))
            gs = build_link_gains(sub)
            _, _, opt = enumerate_p2(gs, 100, pm, s2)
            _, _, got = sequential_update_p2(nearest_association(sub), gs, 100, pm, s2)
            assert got >= 0.98 * opt
            worst_p2 = max(worst_p2, 1 - got / opt)
        info["refine_vs_bb"] = f"{worst_ref:.1e}"
        info["seq_p2_gap"] = f"{worst_p2:.1e}"


def test_08_ordering_chain(clustered):
    with criterion(8, "scatter <= nearest <= refine <= P1 optimum <= P2 optimum; optimal curves non-decreasing in M") as info:
        sc, g = clustered
        pm, s2 = sc.p_max, sc.noise_power
        eps = 1e-9
        checked = 0
        for J in range(4, 9):
            sub = sc.with_irs_subset(range(J))
            gs = build_link_gains(sub)
            init = nearest_association(sub)
            for M in (100, 500, 1000):
                scat = common_sinr_p1(scatter_association(J, 4), gs, M, pm, s2)
                near = common_sinr_p1(init, gs, M, pm, s2)
                ref = common_sinr_p1(successive_refinement_p1(init, gs, M, pm, s2)[0], gs, M, pm, s2)
                bb = solve_bb(build_milp(gs, M, pm, s2)).common_sinr
                p2 = enumerate_p2(gs, M, pm, s2)[2]
                chain = [scat, near, ref, bb, p2]
                assert all(b >= a * (1 - eps) for a, b in zip(chain, chain[1:])), chain
                checked += 1
        grid = range(0, 1001, 100)
        bb_curve = [solve_bb(build_milp(g, M, pm, s2)).common_sinr for M in grid]
        p2_curve = [enumerate_p2(g, M, pm, s2)[2] for M in grid]
        for curve in (bb_curve, p2_curve):
            assert all(b >= a * (1 - eps) for a, b in zip(curve, curve[1:]))
        info["instances"] = checked


def _balanced(rng, J, K):
    order = rng.permutation(J)
    a = np.full(J, -1)
    per = J // K
    for k in range(K):
        a[order[k * per:(k + 1) * per]] = k
    rest = order[K * per:]
    a[rest] = rng.integers(-1, K, rest.size)
    return Association.from_assignment(a, K)


def test_09_network_threshold():
    with criterion(9, "network threshold guarantees gain over no-IRS (50 instances)") as info:
        rng = np.random.default_rng(9)
        largest = 0.0
        for i in range(50):
            K = int(rng.integers(2, 5))
            J = int(rng.integers(K, 3 * K + 1))
            if i % 2 == 0:
                sc = make_scenario("random", K, J, seed=900 + i)
                g, pm, s2 = build_link_gains(sc), sc.p_max, sc.noise_power
            else:
                g, pm, s2 = random_synthetic(rng, K, J), 1.0, 0.05
            M = math.ceil(crossover_M_network(g, pm, s2)) + 1
            largest = max(largest, M)
            g0 = common_sinr_p1(Association.empty(J, K), g, 0, pm, s2)
            for _ in range(20):
                assert common_sinr_p1(_balanced(rng, J, K), g, M, pm, s2) > g0
        info["largest_M"] = int(largest)


def test_10_power_saturation(clustered):
    with criterion(10, "common SINR saturates in p_max and increases in M") as info:
        sc, g = clustered
        init = nearest_association(sc)
        table = {}
        for dbm in (20, 30, 40, 50):
            pm = float(dbm_to_watts(dbm))
            table[(0, dbm)] = optimal_common_sinr(Association.empty(8, 4), g, 0, sc.noise_power, pm)[0]
            for M in (500, 1000):
                table[(M, dbm)] = sequential_update_p2(init, g, M, pm, sc.noise_power)[2]
        db = {k: 10 * math.log10(v) for k, v in table.items()}
        for M in (0, 500, 1000):
            low = db[(M, 30)] - db[(M, 20)]
            high = db[(M, 50)] - db[(M, 40)]
            assert high < low
        for dbm in (20, 30, 40, 50):
            assert db[(0, dbm)] < db[(500, dbm)] < db[(1000, dbm)]
        info["gain_20_30_dB_at_M1000"] = f"{db[(1000, 30)] - db[(1000, 20)]:.2e}"
        info["gain_40_50_dB_at_M1000"] = f"{db[(1000, 50)] - db[(1000, 40)]:.2e}"


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-q"]))
