"""Exact solution of the association-only max-min problem.

The problem is rewritten as a mixed-integer linear program: an epigraph
variable ``z`` is bounded by every user's SINR, the squared sum of a user's
beamforming amplitudes is expanded using ``lam**2 == lam``, and each
pairwise product ``lam_l * lam_j`` is replaced by an auxiliary ``phi`` held
in place by three linear inequalities. :func:`solve_bb` runs a best-bound
branch-and-bound over LP relaxations solved by :mod:`irsnet.lp`.

Variable layout: ``z`` is column 0, ``lam[j, k]`` is column ``1 + j*K + k``
and ``phi[(l, j), k]`` for the ``p``-th pair ``l < j`` is column
``1 + J*K + p*K + k``.
"""

from __future__ import annotations

import heapq
import itertools
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .analytics import BEAM_CONST, Association, _check_M, _powers_vector, interference_matrix
from .errors import CapacityError, InvalidArgumentError, NumericalError
from .geometry import LinkGains
from .lp import LinearProgram, solve_lp

INT_TOL = 1e-6
GAP_TOL = 1e-9
ENUM_P1_LIMIT = 10**8


@dataclass(frozen=True)
class MilpModel:
    K: int
    J: int
    M: int
    gamma_den: np.ndarray  # Gamma_k
    base_coef: np.ndarray  # (K,) SINR with every IRS scattering
    linear_coef: np.ndarray  # (J, K) linear gain of beamforming one IRS
    beam_coef: np.ndarray  # (K,) coherent M^2 coefficient
    q_own: np.ndarray  # (J, K)
    pairs: tuple
    lp: LinearProgram = field(repr=False)
    strengthened: bool = False

    @property
    def num_vars(self) -> int:
        return self.lp.shape[1]

    def lam_index(self, j: int, k: int) -> int:
        return 1 + j * self.K + k

    def phi_index(self, p: int, k: int) -> int:
        return 1 + self.J * self.K + p * self.K + k

    @property
    def lam_slice(self) -> slice:
        return slice(1, 1 + self.J * self.K)

    def row_values(self, assoc) -> np.ndarray:
        """Epigraph right-hand sides for a binary association, i.e. the users' SINRs."""
        lam = np.asarray(getattr(assoc, "lam", assoc), dtype=float)
        if lam.shape != (self.J, self.K):
            raise InvalidArgumentError(f"association must be {self.J} x {self.K}")
        out = self.base_coef.copy()
        out += np.einsum("jk,jk->k", lam, self.linear_coef + self.beam_coef[None, :] * self.q_own**2)
        for l, j in self.pairs:
            out += 2.0 * self.beam_coef * lam[l] * lam[j] * self.q_own[l] * self.q_own[j]
        return out

    def objective_of(self, assoc) -> float:
        return float(np.min(self.row_values(assoc)))

    def vector_for(self, assoc) -> np.ndarray:
        """Full variable vector (z, lam, phi) encoding a binary association."""
        lam = np.asarray(getattr(assoc, "lam", assoc), dtype=float)
        x = np.zeros(self.num_vars)
        x[self.lam_slice] = lam.reshape(-1)
        for p, (l, j) in enumerate(self.pairs):
            for k in range(self.K):
                x[self.phi_index(p, k)] = lam[l, k] * lam[j, k]
        x[0] = min(self.objective_of(lam), self.lp.hi[0])
        return x


def _gamma_denominators(gains: LinkGains, M: int, noise_power: float, powers) -> np.ndarray:
    K = gains.K
    p = _powers_vector(powers, K)
    if np.any(p <= 0):
        raise InvalidArgumentError("every BS needs positive power in the association problem")
    nu = interference_matrix(gains, M)  # [n, k], zero diagonal
    return (noise_power + p @ nu) / p


def _coefficients(gains: LinkGains, M: int, gamma_den):
    base = gains.alpha_sq.diagonal() + M * np.einsum("kjk->k", gains.q**2) if gains.J else gains.alpha_sq.diagonal().copy()
    X = base / gamma_den
    Y = M * gains.a_coeff / gamma_den[None, :]
    Z = M * M * BEAM_CONST / gamma_den
    return base, X, Y, Z


def build_milp(
    gains: LinkGains,
    M: int,
    p_max: float,
    noise_power: float,
    powers=None,
    strengthen: bool = False,
) -> MilpModel:
    """Assemble the MILP.

    ``powers`` defaults to every BS at ``p_max``; a different vector gives the
    association problem at fixed transmit powers (used by alternating
    optimisation). ``strengthen`` adds ``phi <= lam_j`` which turns the
    linearisation into the full McCormick envelope.
    """
    M = _check_M(M)
    if not p_max > 0 or not noise_power > 0:
        raise InvalidArgumentError("p_max and noise power must be positive")
    K, J = gains.K, gains.J
    gamma_den = _gamma_denominators(gains, M, noise_power, p_max if powers is None else powers)
    _, X, Y, Z = _coefficients(gains, M, gamma_den)
    q_own = gains.q_own if J else np.zeros((0, K))
    pairs = tuple(itertools.combinations(range(J), 2))
    n = 1 + J * K + len(pairs) * K

    def lam(j, k):
        return 1 + j * K + k

    def phi(p, k):
        return 1 + J * K + p * K + k

    rows, senses, rhs = [], [], []

    def add(coefs, sense, b):
        r = np.zeros(n)
        for idx, v in coefs:
            r[idx] += v
        rows.append(r)
        senses.append(sense)
        rhs.append(b)

    for k in range(K):
        coefs = [(0, 1.0)]
        coefs += [(lam(j, k), -(Y[j, k] + Z[k] * q_own[j, k] ** 2)) for j in range(J)]
        coefs += [(phi(p, k), -2.0 * Z[k] * q_own[l, k] * q_own[j, k]) for p, (l, j) in enumerate(pairs)]
        add(coefs, "<=", X[k])
    for j in range(J):
        add([(lam(j, k), 1.0) for k in range(K)], "<=", 1.0)
    for p, (l, j) in enumerate(pairs):
        for k in range(K):
            f, a, b = phi(p, k), lam(l, k), lam(j, k)
            add([(f, 1.0), (a, -1.0)], "<=", 0.0)
            add([(b, 1.0), (a, 1.0), (f, -1.0)], "<=", 1.0)
            add([(f, 1.0), (b, -1.0), (a, 1.0)], "<=", 1.0)
            if strengthen:
                add([(f, 1.0), (b, -1.0)], "<=", 0.0)

    # z box: every positive single-IRS term plus every pairwise term bounds any row
    full = X.copy()
    if J:
        single = np.maximum(Y + Z[None, :] * q_own**2, 0.0).sum(axis=0)
        cross = Z * (q_own.sum(axis=0) ** 2 - (q_own**2).sum(axis=0))
        full += single + np.maximum(cross, 0.0)
    lo = np.zeros(n)
    hi = np.ones(n)
    hi[0] = float(full.max())
    c = np.zeros(n)
    c[0] = 1.0
    names = ["z"] + [f"lam_{j}_{k}" for j in range(J) for k in range(K)]
    names += [f"phi_{l}_{j}_{k}" for (l, j) in pairs for k in range(K)]
    A = np.array(rows) if rows else np.zeros((0, n))
    lp = LinearProgram(c, A, tuple(senses), np.array(rhs), lo, hi, tuple(names))
    return MilpModel(K, J, M, gamma_den, X, Y, Z, q_own, pairs, lp, strengthen)


@dataclass
class BbSolution:
    assoc: Association
    common_sinr: float
    nodes_explored: int
    proof_gap: float
    status: str = "optimal"
    node_log: list | None = field(default=None, repr=False)


@dataclass(frozen=True)
class BbNode:
    lo: np.ndarray
    hi: np.ndarray
    bound: float


def _round(model: MilpModel, x) -> Association:
    lam = x[model.lam_slice].reshape(model.J, model.K)
    a = np.where(lam.max(axis=1) > 0, np.argmax(lam, axis=1), -1) if model.J else np.zeros(0, int)
    return Association.from_assignment(a, model.K)


def _branch_var(model: MilpModel, x, lo, hi):
    lam = x[model.lam_slice]
    free = hi[model.lam_slice] > lo[model.lam_slice]
    frac = np.abs(lam - np.round(lam))
    cand = free & (frac > INT_TOL)
    if not cand.any():
        return None
    score = np.where(cand, np.abs(lam - 0.5), np.inf)
    return int(np.argmin(score))  # first index among ties, i.e. smallest (j, k)


def solve_bb(model: MilpModel, record_nodes: bool = False, max_nodes: int | None = None) -> BbSolution:
    """Global optimum of the association MILP by best-bound branch-and-bound."""
    K, J = model.K, model.J
    if J == 0:
        assoc = Association.empty(0, K)
        return BbSolution(assoc, model.objective_of(assoc), 0, 0.0, node_log=[] if record_nodes else None)

    incumbent = Association.empty(J, K)
    best = model.objective_of(incumbent)
    base = model.lp
    counter = itertools.count()
    heap = [(-np.inf, next(counter), base.lo.copy(), base.hi.copy())]
    nodes = 0
    log = [] if record_nodes else None

    def close_enough(bound):
        return bound <= best + GAP_TOL * max(abs(best), 1e-300)

    while heap:
        neg_parent, _, lo, hi = heapq.heappop(heap)
        if close_enough(-neg_parent):
            heapq.heappush(heap, (neg_parent, next(counter), lo, hi))
            break
        if max_nodes is not None and nodes >= max_nodes:
            heapq.heappush(heap, (neg_parent, next(counter), lo, hi))
            break
        try:
            sol = solve_lp(base.with_bounds(lo, hi))
        except NumericalError as exc:
            raise NumericalError(f"LP relaxation failed at node {nodes}: {exc}") from exc
        nodes += 1
        if sol.status == "infeasible":
            continue
        if sol.status != "optimal":
            raise NumericalError(f"LP relaxation at node {nodes} returned {sol.status}")
        bound = sol.objective_value
        if log is not None:
            log.append(BbNode(lo.copy(), hi.copy(), bound))
        rounded = _round(model, sol.x)
        val = model.objective_of(rounded)
        if val > best:
            best, incumbent = val, rounded
        if close_enough(bound):
            continue
        b = _branch_var(model, sol.x, lo, hi)
        if b is None:
            # integral relaxation: the rounded association is its own optimum
            continue
        j, k = divmod(b, K)
        idx = 1 + b
        up_lo, up_hi = lo.copy(), hi.copy()
        up_lo[idx] = 1.0
        row = slice(1 + j * K, 1 + (j + 1) * K)
        for kk in range(K):
            if kk != k:
                up_hi[1 + j * K + kk] = 0.0
        up_lo[row] = np.minimum(up_lo[row], up_hi[row])
        dn_lo, dn_hi = lo.copy(), hi.copy()
        dn_hi[idx] = 0.0
        heapq.heappush(heap, (-bound, next(counter), up_lo, up_hi))
        heapq.heappush(heap, (-bound, next(counter), dn_lo, dn_hi))

    top = max((-h[0] for h in heap), default=best)
    top = max(top, best)
    gap = (top - best) / max(abs(best), 1e-300)
    status = "optimal" if gap <= GAP_TOL else "node_limit"
    return BbSolution(incumbent, best, nodes, gap, status, log)


def _enum_inputs(gains: LinkGains, M: int, gamma_den):
    base, _, _, _ = _coefficients(gains, M, gamma_den)
    lin = M * gains.a_coeff
    return base, np.ascontiguousarray(lin), np.ascontiguousarray(gains.q_own), M * M * BEAM_CONST


def enumerate_p1(gains: LinkGains, M: int, p_max: float, noise_power: float, powers=None) -> BbSolution:
    """Exhaustive search over all ``(K+1)**J`` associations, unassigned included.

    States are visited in mixed-radix order with IRS 0 as the most
    significant digit (digit 0 = unassigned, digit ``k+1`` = user ``k``);
    the first state attaining the maximum wins.
    """
    M = _check_M(M)
    K, J = gains.K, gains.J
    states = (K + 1) ** J
    if states > ENUM_P1_LIMIT:
        raise CapacityError(f"{states} associations exceed the enumeration limit {ENUM_P1_LIMIT}")
    gamma_den = _gamma_denominators(gains, M, noise_power, p_max if powers is None else powers)
    if J == 0:
        base, _, _, _ = _coefficients(gains, M, gamma_den)
        return BbSolution(Association.empty(0, K), float(np.min(base / gamma_den)), 1, 0.0)
    base, lin, q_own, quad = _enum_inputs(gains, M, gamma_den)
    val, assign = kernels.enumerate_p1_states(base, lin, q_own, quad, 1.0 / gamma_den)
    return BbSolution(Association.from_assignment(assign, K), float(val), states, 0.0)


def solve_p1(gains: LinkGains, M: int, p_max: float, noise_power: float, powers=None, **kw) -> BbSolution:
    return solve_bb(build_milp(gains, M, p_max, noise_power, powers), **kw)
