import itertools

import numpy as np
import pytest

from conftest import two_user_gains, random_synthetic
from irsnet.analytics import Association, average_sinr, common_sinr_p1
from irsnet.errors import CapacityError
from irsnet.geometry import synthetic_gains
from irsnet.lp import solve_lp, to_cplex_lp
from irsnet.milp import build_milp, enumerate_p1, solve_bb


def _all_assoc(J, K):
    for a in itertools.product(range(-1, K), repeat=J):
        yield Association.from_assignment(a, K)


def _brute_p1(g, M, p_max, noise):
    best, arg = -np.inf, None
    for a in _all_assoc(g.J, g.K):
        v = common_sinr_p1(a, g, M, p_max, noise)
        if v > best:
            best, arg = v, a
    return best, arg


def test_row_values_match_closed_form(rng):
    for _ in range(10):
        K, J = int(rng.integers(1, 4)), int(rng.integers(1, 5))
        g = random_synthetic(rng, K, J)
        p = rng.uniform(0.5, 2.0, K)
        model = build_milp(g, 50, 2.0, 0.1, powers=p)
        for _ in range(10):
            a = Association.from_assignment(rng.integers(-1, K, J), K)
            ref = average_sinr(a, p, g, 50, 0.1).per_user
            assert np.allclose(model.row_values(a), ref, rtol=1e-10)


def test_single_irs_shape():
    g = two_user_gains(1.0)
    m = build_milp(g, 10, 10.0, 1.0)
    assert m.num_vars == 1 + 2
    # two epigraph rows and one row-sum row
    assert m.lp.shape[0] == 3
    assert m.lp.senses == ("<=", "<=", "<=")


def test_shape_counts():
    g = synthetic_gains(np.eye(3) + 0.1, np.ones((3, 4)), np.ones((4, 3)))
    m = build_milp(g, 10, 1.0, 1.0)
    assert m.num_vars == 1 + 12 + 6 * 3
    assert m.lp.shape[0] == 3 + 4 + 3 * 6 * 3
    assert build_milp(g, 10, 1.0, 1.0, strengthen=True).lp.shape[0] == 3 + 4 + 4 * 6 * 3


def _phi_feasible_range(model, x_lam):
    """Interval of each phi allowed by the linearization rows for fixed lambda."""
    lp = model.lp
    out = {}
    for p, (l, j) in enumerate(model.pairs):
        for k in range(model.K):
            f = model.phi_index(p, k)
            lo, hi = lp.lo[f], lp.hi[f]
            for row, b in zip(lp.A[model.K + model.J:], lp.rhs[model.K + model.J:]):
                if row[f] == 0:
                    continue
                rest = b - row @ x_lam
                if row[f] > 0:
                    hi = min(hi, rest / row[f])
                else:
                    lo = max(lo, rest / row[f])
            out[(p, k)] = (lo, hi)
    return out


def test_linearization_forces_products():
    for J in range(2, 6):
        g = synthetic_gains(np.array([[1.0, 0.2], [0.2, 1.0]]), np.ones((2, J)), np.ones((J, 2)))
        m = build_milp(g, 4, 1.0, 1.0)
        for a in _all_assoc(J, 2):
            x = m.vector_for(a)
            x_lam = x.copy()
            x_lam[1 + J * 2:] = 0.0
            for (p, k), (lo, hi) in _phi_feasible_range(m, x_lam).items():
                l, j = m.pairs[p]
                prod = a.lam[l, k] * a.lam[j, k]
                assert lo == pytest.approx(prod) and hi == pytest.approx(prod)


def test_worked_case_phi_zero():
    g = synthetic_gains(np.array([[1.0]]), np.ones((1, 2)), np.ones((2, 1)))
    m = build_milp(g, 4, 1.0, 1.0)
    x = m.vector_for(Association.from_assignment([0, -1], 1))
    assert _phi_feasible_range(m, x)[(0, 0)] == (0.0, 0.0)


def test_vector_for_is_feasible(rng):
    g = random_synthetic(rng, 3, 4)
    m = build_milp(g, 30, 1.0, 0.1)
    for _ in range(20):
        a = Association.from_assignment(rng.integers(-1, 3, 4), 3)
        x = m.vector_for(a)
        r = m.lp.A @ x - m.lp.rhs
        assert np.all(r <= 1e-9)
        assert np.all(x <= m.lp.hi) and np.all(x >= m.lp.lo)


def test_z_box_holds_every_assignment_small_m(rng):
    for M in (1, 2, 5):
        g = random_synthetic(rng, 2, 4, spread=3.0)
        m = build_milp(g, M, 1.0, 0.1)
        assert max(m.row_values(a).max() for a in _all_assoc(4, 2)) <= m.lp.hi[0] * (1 + 1e-12)


def test_j0():
    g = synthetic_gains([[1.0, 0.2], [0.3, 2.0]], np.zeros((2, 0)) + 1, np.zeros((0, 2)) + 1)
    bb = solve_bb(build_milp(g, 10, 1.0, 0.1))
    en = enumerate_p1(g, 10, 1.0, 0.1)
    ref = common_sinr_p1(Association.empty(0, 2), g, 10, 1.0, 0.1)
    assert bb.assoc.J == 0 and bb.common_sinr == pytest.approx(ref)
    assert en.common_sinr == pytest.approx(ref)


def test_k1_assigns_everything(rng):
    g = random_synthetic(rng, 1, 4)
    en = enumerate_p1(g, 10, 1.0, 0.1)
    assert en.assoc.assignment.tolist() == [0, 0, 0, 0]
    assert solve_bb(build_milp(g, 10, 1.0, 0.1)).common_sinr == pytest.approx(en.common_sinr, rel=1e-9)


def test_two_user_example_goes_to_bottleneck():
    g = two_user_gains(1.0)
    sinrs = average_sinr(np.zeros((1, 2)), [10.0, 10.0], g, 10, 1.0).per_user
    en = enumerate_p1(g, 10, 10.0, 1.0)
    assert en.assoc.assignment.tolist() == [int(np.argmin(sinrs))]
    assert en.nodes_explored == 3


def test_enumeration_matches_brute(rng):
    for _ in range(10):
        K, J = int(rng.integers(1, 4)), int(rng.integers(1, 5))
        g = random_synthetic(rng, K, J)
        en = enumerate_p1(g, 20, 1.0, 0.1)
        best, arg = _brute_p1(g, 20, 1.0, 0.1)
        assert en.common_sinr == pytest.approx(best, rel=1e-12)
        assert en.assoc == arg


def test_enum_tie_break_first_state():
    # identical IRSs: the first maximiser in mixed-radix order wins
    g = synthetic_gains(np.array([[1.0, 0.5], [0.5, 1.0]]), np.ones((2, 2)), np.ones((2, 2)))
    en = enumerate_p1(g, 10, 1.0, 1.0)
    assert en.assoc.assignment.tolist() == [0, 1]


def test_bb_matches_enumeration_k2j2(rng):
    g = random_synthetic(rng, 2, 2)
    assert solve_bb(build_milp(g, 10, 1.0, 0.1)).common_sinr == pytest.approx(enumerate_p1(g, 10, 1.0, 0.1).common_sinr, rel=1e-9)


@pytest.mark.parametrize("strengthen", [False, True])
def test_bb_matches_enumeration(rng, strengthen):
    for _ in range(8):
        J = int(rng.integers(3, 6))
        g = random_synthetic(rng, 3, J)
        bb = solve_bb(build_milp(g, 100, 1.0, 0.05, strengthen=strengthen))
        en = enumerate_p1(g, 100, 1.0, 0.05)
        assert bb.status == "optimal" and bb.proof_gap <= 1e-9
        assert bb.common_sinr == pytest.approx(en.common_sinr, rel=1e-9)
        assert bb.nodes_explored < 4**J


def test_relaxation_validity_and_monotone_incumbent(rng):
    for _ in range(3):
        J = int(rng.integers(3, 7))
        g = random_synthetic(rng, 2, J)
        model = build_milp(g, 50, 1.0, 0.05)
        bb = solve_bb(model, record_nodes=True)
        for node in bb.node_log:
            lam_lo = node.lo[model.lam_slice].reshape(J, 2)
            lam_hi = node.hi[model.lam_slice].reshape(J, 2)
            best = -np.inf
            for a in _all_assoc(J, 2):
                if np.all(a.lam >= lam_lo) and np.all(a.lam <= lam_hi):
                    best = max(best, model.objective_of(a))
            assert node.bound >= best - 1e-9 * abs(best)


def test_incumbent_non_decreasing(rng):
    g = random_synthetic(rng, 3, 6)
    model = build_milp(g, 100, 1.0, 0.05)
    prev = -np.inf
    for n in range(1, 30):
        v = solve_bb(model, max_nodes=n).common_sinr
        assert v >= prev
        prev = v


def test_node_limit_status(rng):
    g = random_synthetic(rng, 3, 7)
    sol = solve_bb(build_milp(g, 100, 1.0, 0.05), max_nodes=1)
    assert sol.nodes_explored == 1
    assert sol.status in ("node_limit", "optimal")


def test_clustered_nodes_below_k_pow_j(clustered8):
    sc, g = clustered8
    bb = solve_bb(build_milp(g, sc.num_elements, sc.p_max, sc.noise_power))
    assert bb.nodes_explored < 4**8
    assert bb.common_sinr == pytest.approx(enumerate_p1(g, sc.num_elements, sc.p_max, sc.noise_power).common_sinr, rel=1e-9)


def test_capacity_error():
    g = synthetic_gains(np.eye(4) + 0.1, np.ones((4, 12)), np.ones((12, 4)))
    with pytest.raises(CapacityError):
        enumerate_p1(g, 10, 1.0, 1.0)


def test_root_relaxation_export(rng):
    g = random_synthetic(rng, 2, 3)
    m = build_milp(g, 10, 1.0, 0.1)
    text = to_cplex_lp(m.lp)
    assert "lam_2_1" in text and "phi_0_1_0" in text
    assert solve_lp(m.lp).objective_value >= enumerate_p1(g, 10, 1.0, 0.1).common_sinr * (1 - 1e-9)
