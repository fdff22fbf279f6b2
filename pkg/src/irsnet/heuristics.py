"""Association heuristics, baselines and exhaustive search with power control."""

from __future__ import annotations

from dataclasses import asdict, dataclass, field

import numpy as np

from . import kernels
from .analytics import (
    Association,
    _check_M,
    _lam_matrix,
    effective_signal_powers,
    interference_matrix,
)
from .errors import CapacityError, InvalidArgumentError, NumericalError, PreconditionError
from .geometry import LinkGains, Scenario
from .milp import _enum_inputs, _gamma_denominators, build_milp, solve_bb
from .power import EIG_MAX_ITER, EIG_TOL, PowerAllocation, optimal_common_sinr, optimal_powers

ENUM_P2_LIMIT = 10**6
IMPROVE_RTOL = 1e-9


def _need_m2(M):
    M = _check_M(M)
    if M < 2:
        raise PreconditionError(
            f"M={M}: an extra IRS is only guaranteed to help its user for M >= 2"
        )
    return M


def nearest_association(scenario: Scenario) -> Association:
    """Each IRS goes to the closest user; ties go to the lower user index."""
    if scenario.J == 0:
        return Association.empty(0, scenario.K)
    d = np.linalg.norm(scenario.irs_positions[:, None, :] - scenario.user_positions[None], axis=-1)
    return Association.from_assignment(np.argmin(d, axis=1), scenario.K)


def scatter_association(J: int, K: int) -> Association:
    """Random-scattering baseline: no IRS is tuned to anyone."""
    return Association.empty(J, K)


# --- association only ------------------------------------------------------

class _P1Eval:
    def __init__(self, gains, M, p_max, noise_power):
        self.gains, self.M = gains, M
        self.gamma_den = _gamma_denominators(gains, M, noise_power, p_max)

    def sinrs(self, lam):
        return effective_signal_powers(lam, self.gains, self.M) / self.gamma_den


@dataclass
class RefinementStep:
    round: int
    bottleneck: int
    candidates: list
    chosen: int
    common_sinr: float


@dataclass
class RefinementTrace:
    initial_sinr: float
    iterations: list = field(default_factory=list)

    def to_json(self) -> dict:
        return {"initial_sinr": self.initial_sinr, "iterations": [asdict(s) for s in self.iterations]}


def successive_refinement_p1(init, gains: LinkGains, M: int, p_max: float, noise_power: float):
    """Greedy refinement: repeatedly hand one IRS to the current bottleneck user.

    Each round tries every IRS not yet serving the bottleneck user (unassigned
    IRSs included). The move with the highest resulting common SINR wins,
    ties going to the higher SINR of the old bottleneck and then the lower
    IRS index. Stops once no move strictly improves the common SINR.
    """
    M = _need_m2(M)
    ev = _P1Eval(gains, M, p_max, noise_power)
    lam = _lam_matrix(init, gains).copy()
    s = ev.sinrs(lam)
    gc = float(s.min())
    trace = RefinementTrace(gc)
    r = 0
    while True:
        kb = int(np.argmin(s))
        omega = [j for j in range(gains.J) if lam[j, kb] != 1]
        if not omega:
            break
        best = None
        for j in omega:
            cand = lam.copy()
            cand[j] = 0
            cand[j, kb] = 1
            cs = ev.sinrs(cand)
            key = (float(cs.min()), float(cs[kb]))
            if best is None or key > best[0]:
                best = (key, j, cand, cs)
        (g_new, _), j_star, cand, cs = best
        if not g_new > gc:
            break
        r += 1
        lam, s, gc = cand, cs, g_new
        trace.iterations.append(RefinementStep(r, kb, omega, j_star, gc))
    return Association(lam), trace


def sequential_update_p1(init, gains: LinkGains, M: int, p_max: float, noise_power: float):
    """Per-IRS pass: move IRS j to the current bottleneck user if that helps.

    Returns ``(assoc, common_sinr)``.
    """
    M = _need_m2(M)
    ev = _P1Eval(gains, M, p_max, noise_power)
    lam = _lam_matrix(init, gains).copy()
    s = ev.sinrs(lam)
    changed = True
    while changed:
        changed = False
        for j in range(gains.J):
            kb = int(np.argmin(s))
            if lam[j, kb] == 1:
                continue
            cand = lam.copy()
            cand[j] = 0
            cand[j, kb] = 1
            cs = ev.sinrs(cand)
            if cs.min() > s.min():
                lam, s, changed = cand, cs, True
    return Association(lam), float(s.min())


# --- with power control ----------------------------------------------------

def _p2_objectives(sig, nu_sq, noise_power, p_max, simplified):
    """max_k rho(F + v e_k^T / p_max) (or rho(F)) for each row of ``sig``."""
    N, K = sig.shape
    if simplified:
        F = np.ascontiguousarray(nu_sq.T[None] / sig[:, :, None])
        rho, _, it, conv = kernels.power_iteration(F, EIG_TOL, EIG_MAX_ITER, False)
        obj = rho
    else:
        stacks = np.ascontiguousarray(kernels._ratio_stacks(sig, nu_sq, noise_power, p_max).reshape(-1, K, K))
        rho, _, it, conv = kernels.power_iteration(stacks, EIG_TOL, EIG_MAX_ITER, False)
        obj = rho.reshape(N, K).max(axis=1)
    if not np.all(conv):
        raise NumericalError("power iteration did not converge while scoring associations")
    return obj


def sequential_update_p2(
    init, gains: LinkGains, M: int, p_max: float, noise_power: float, simplified: bool = False
):
    """Visit IRSs in ascending order; give each the user minimising the balancing objective.

    The objective is the largest Perron root over the K noise-augmented ratio
    matrices (smaller is better), or the root of the plain ratio matrix when
    ``simplified``. Passes repeat until one makes no change. Returns
    ``(assoc, powers, common_sinr)`` where the last two come from exact
    power control.
    """
    M = _need_m2(M)
    K, J = gains.K, gains.J
    lam = _lam_matrix(init, gains).copy()
    nu = interference_matrix(gains, M)
    cur = _p2_objectives(effective_signal_powers(lam, gains, M)[None], nu, noise_power, p_max, simplified)[0]
    changed = True
    while changed and J:
        changed = False
        for j in range(J):
            cands = np.repeat(lam[None], K, axis=0)
            cands[:, j, :] = 0
            cands[np.arange(K), j, np.arange(K)] = 1
            sig = np.stack([effective_signal_powers(c, gains, M) for c in cands])
            obj = _p2_objectives(sig, nu, noise_power, p_max, simplified)
            k = int(np.argmin(obj))
            unassigned = not lam[j].any()
            if unassigned or (obj[k] < cur and lam[j, k] != 1):
                changed = changed or lam[j, k] != 1
                lam = cands[k]
                cur = obj[k]
    assoc = Association(lam)
    gamma, _ = optimal_common_sinr(assoc, gains, M, noise_power, p_max)
    return assoc, optimal_powers(assoc, gains, M, noise_power, p_max), gamma


def alternating_optimization_p2(init, gains: LinkGains, M: int, p_max: float, noise_power: float, max_rounds: int = 50):
    """Alternate exact power control and an exact association solve at fixed powers.

    Returns ``(assoc, powers, common_sinr, num_lambda_updates)``.
    """
    M = _need_m2(M)
    assoc = Association(_lam_matrix(init, gains))
    updates = 0
    for _ in range(max_rounds):
        p = optimal_powers(assoc, gains, M, noise_power, p_max)
        model = build_milp(gains, M, p_max, noise_power, powers=p.p)
        sol = solve_bb(model)
        now = model.objective_of(assoc)
        if sol.assoc == assoc or not sol.common_sinr > now * (1 + IMPROVE_RTOL):
            break
        assoc = sol.assoc
        updates += 1
    gamma, _ = optimal_common_sinr(assoc, gains, M, noise_power, p_max)
    return assoc, optimal_powers(assoc, gains, M, noise_power, p_max), gamma, updates


def enumerate_p2(gains: LinkGains, M: int, p_max: float, noise_power: float):
    """Exhaustive search with optimal power control for every association.

    Same state order and tie rule as :func:`irsnet.milp.enumerate_p1`.
    Returns ``(assoc, powers, common_sinr)``.
    """
    M = _check_M(M)
    K, J = gains.K, gains.J
    states = (K + 1) ** J
    if states > ENUM_P2_LIMIT:
        raise CapacityError(f"{states} associations exceed the enumeration limit {ENUM_P2_LIMIT}")
    if J == 0:
        assoc = Association.empty(0, K)
    else:
        gamma_den = np.ones(K)
        base, lin, q_own, quad = _enum_inputs(gains, M, gamma_den)
        nu = np.ascontiguousarray(interference_matrix(gains, M))
        _, assign, bad = kernels.enumerate_p2_states(
            base, lin, q_own, quad, nu, float(noise_power), float(p_max), EIG_TOL, EIG_MAX_ITER
        )
        if bad:
            raise NumericalError(f"power iteration failed to converge for {bad} matrices")
        assoc = Association.from_assignment(assign, K)
    gamma, _ = optimal_common_sinr(assoc, gains, M, noise_power, p_max)
    return assoc, optimal_powers(assoc, gains, M, noise_power, p_max), gamma


# --- single-IRS switch -----------------------------------------------------

def switch_delta(assoc, gains: LinkGains, M: int, j0: int, k_from: int, k_to: int):
    """Change of the effective channel powers of ``k_to`` and ``k_from`` when IRS ``j0`` switches.

    Returns ``(delta_recipient, delta_donor)`` by direct recomputation.
    """
    lam = _lam_matrix(assoc, gains)
    if not 0 <= j0 < gains.J:
        raise InvalidArgumentError(f"IRS index {j0} out of range")
    if k_from == k_to:
        raise InvalidArgumentError("source and destination users must differ")
    if not (0 <= k_from < gains.K and 0 <= k_to < gains.K):
        raise InvalidArgumentError("user index out of range")
    if lam[j0, k_from] != 1:
        raise InvalidArgumentError(f"IRS {j0} is not associated with user {k_from}")
    before = effective_signal_powers(lam, gains, M)
    after_lam = lam.copy()
    after_lam[j0, k_from] = 0
    after_lam[j0, k_to] = 1
    after = effective_signal_powers(after_lam, gains, M)
    return float(after[k_to] - before[k_to]), float(after[k_from] - before[k_from])


def switch_delta_closed_form(assoc, gains: LinkGains, M: int, j0: int, k_to: int) -> float:
    """Recipient gain written out: ``(M^2 pi^2/16) q (2 S + q) + M A``."""
    lam = _lam_matrix(assoc, gains)
    q = gains.q_own[:, k_to]
    S = float(lam[:, k_to] @ q)
    qi = float(q[j0])
    return float(M * M * np.pi**2 / 16 * qi * (2 * S + qi) + M * gains.a_coeff[j0, k_to])


def switch_lower_bound(gains: LinkGains, M: int, j0: int, k_to: int) -> float:
    """``(M q^2 / 16)(M pi^2 - 16)``; positive exactly when ``M >= 2``."""
    q2 = float(gains.q_own[j0, k_to] ** 2)
    return M * q2 / 16.0 * (M * np.pi**2 - 16.0)
