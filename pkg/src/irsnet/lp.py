"""Dense bounded-variable primal simplex for small linear programs.

Problems are stated as ``maximize c^T x`` subject to rows ``A x (<=|>=|=) b``
and finite bounds ``lo <= x <= hi``. Two phases: phase I minimises the sum
of artificial variables, phase II optimises the objective. Pricing is
Dantzig's rule, switching to Bland's rule after ``5 (m + n)`` pivots
without objective progress.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .errors import InvalidArgumentError, NumericalError

FEAS_TOL = 1e-9
OPT_TOL = 1e-9
PIV_TOL = 1e-11

SENSES = ("<=", ">=", "=")


@dataclass(frozen=True)
class LinearProgram:
    objective: np.ndarray
    A: np.ndarray
    senses: tuple
    rhs: np.ndarray
    lo: np.ndarray
    hi: np.ndarray
    names: tuple | None = None

    def __post_init__(self):
        c = np.asarray(self.objective, dtype=float).reshape(-1)
        n = c.size
        A = np.asarray(self.A, dtype=float)
        if A.size == 0:
            A = A.reshape(-1, n)
        if A.ndim != 2 or A.shape[1] != n:
            raise InvalidArgumentError(f"constraint matrix must have {n} columns, got {A.shape}")
        b = np.asarray(self.rhs, dtype=float).reshape(-1)
        senses = tuple(self.senses)
        if len(senses) != A.shape[0] or b.size != A.shape[0]:
            raise InvalidArgumentError("senses and rhs must have one entry per constraint row")
        if any(s not in SENSES for s in senses):
            raise InvalidArgumentError(f"row senses must be among {SENSES}")
        lo = np.asarray(self.lo, dtype=float).reshape(-1)
        hi = np.asarray(self.hi, dtype=float).reshape(-1)
        if lo.size != n or hi.size != n:
            raise InvalidArgumentError("bounds must have one entry per variable")
        if not (np.all(np.isfinite(lo)) and np.all(np.isfinite(hi))):
            raise InvalidArgumentError("variable bounds must be finite")
        if np.any(lo > hi):
            raise InvalidArgumentError("lower bound exceeds upper bound")
        if not (np.all(np.isfinite(A)) and np.all(np.isfinite(b)) and np.all(np.isfinite(c))):
            raise InvalidArgumentError("LP data must be finite")
        if self.names is not None and len(self.names) != n:
            raise InvalidArgumentError("need one name per variable")
        for name, v in (("objective", c), ("A", A), ("rhs", b), ("lo", lo), ("hi", hi)):
            object.__setattr__(self, name, v)
        object.__setattr__(self, "senses", senses)

    @property
    def shape(self):
        return self.A.shape

    def with_bounds(self, lo, hi) -> "LinearProgram":
        return LinearProgram(self.objective, self.A, self.senses, self.rhs, lo, hi, self.names)


@dataclass
class LpSolution:
    status: str
    x: np.ndarray
    objective_value: float
    duals: np.ndarray | None = None
    iterations: int = 0
    basis: np.ndarray | None = field(default=None, repr=False)


class _Tableau:
    """Working state of one simplex run over the augmented column set."""

    def __init__(self, lp: LinearProgram):
        A, b = lp.A, lp.rhs
        m, n = A.shape
        self.m, self.n = m, n
        ineq = [i for i, s in enumerate(lp.senses) if s != "="]
        n_slack = len(ineq)
        resid = b - A @ lp.lo
        slack_of_row = {}
        cols = [A]
        S = np.zeros((m, n_slack))
        for c, i in enumerate(ineq):
            S[i, c] = 1.0 if lp.senses[i] == "<=" else -1.0
            slack_of_row[i] = n + c
        cols.append(S)
        basis = np.empty(m, dtype=np.int64)
        art_rows = []
        for i in range(m):
            s = lp.senses[i]
            if (s == "<=" and resid[i] >= 0) or (s == ">=" and resid[i] <= 0):
                basis[i] = slack_of_row[i]
            else:
                art_rows.append(i)
        n_art = len(art_rows)
        Art = np.zeros((m, n_art))
        for c, i in enumerate(art_rows):
            Art[i, c] = 1.0 if resid[i] >= 0 else -1.0
            basis[i] = n + n_slack + c
        cols.append(Art)
        self.aug = np.hstack(cols)
        N = self.aug.shape[1]
        self.N = N
        self.first_art = n + n_slack
        self.lo = np.concatenate([lp.lo, np.zeros(n_slack + n_art)])
        self.hi = np.concatenate([lp.hi, np.full(n_slack, np.inf), np.full(n_art, np.inf)])
        self.c = np.concatenate([lp.objective, np.zeros(n_slack + n_art)])
        self.b = b
        self.basis = basis
        self.is_basic = np.zeros(N, dtype=bool)
        self.is_basic[basis] = True
        self.at_upper = np.zeros(N, dtype=bool)
        coef = self.aug[np.arange(m), basis]
        self.T = np.empty((m + 1, N))
        self.T[:m] = self.aug / coef[:, None]
        self.beta = resid / coef
        self.iterations = 0

    def nonbasic_values(self):
        x = np.where(self.at_upper, self.hi, self.lo)
        x[self.is_basic] = 0.0
        return x

    def set_costs(self, cost):
        self.cost = cost
        self.T[self.m] = cost - cost[self.basis] @ self.T[: self.m]
        self.T[self.m, self.basis] = 0.0

    def objective(self):
        x = self.nonbasic_values()
        x[self.basis] = self.beta
        return float(self.cost @ x)

    def refactor(self):
        """Recompute tableau, basic values and reduced costs from the original data."""
        B = self.aug[:, self.basis]
        try:
            self.T[: self.m] = np.linalg.solve(B, self.aug)
            xn = self.nonbasic_values()
            self.beta = np.linalg.solve(B, self.b - self.aug @ xn)
        except np.linalg.LinAlgError as exc:
            raise NumericalError("singular basis during refactorisation") from exc
        self.set_costs(self.cost)

    def run(self, max_iter):
        m = self.m
        T = self.T
        d = T[m]
        stall_limit = 5 * (m + self.n)
        stalled = 0
        bland = False
        movable = self.hi > self.lo
        for _ in range(max_iter):
            up = (~self.is_basic) & (~self.at_upper) & movable & (d > OPT_TOL)
            down = (~self.is_basic) & self.at_upper & (d < -OPT_TOL)
            elig = up | down
            if not elig.any():
                return "optimal"
            if bland:
                q = int(np.flatnonzero(elig)[0])
            else:
                q = int(np.argmax(np.where(elig, np.abs(d), 0.0)))
            delta = 1.0 if up[q] else -1.0
            a = delta * T[:m, q]
            lo_b = self.lo[self.basis]
            hi_b = self.hi[self.basis]
            t = np.full(m, np.inf)
            pos = a > PIV_TOL
            neg = a < -PIV_TOL
            t[pos] = (self.beta[pos] - lo_b[pos]) / a[pos]
            fin = neg & np.isfinite(hi_b)
            t[fin] = (hi_b[fin] - self.beta[fin]) / (-a[fin])
            np.maximum(t, 0.0, out=t)
            t_flip = self.hi[q] - self.lo[q]
            t_row = t.min() if m else np.inf
            if t_row == np.inf and t_flip == np.inf:
                return "unbounded"
            gain = abs(d[q]) * min(t_row, t_flip)
            if gain > 1e-12 * (1.0 + abs(self.objective_fast())):
                stalled = 0
            else:
                stalled += 1
                if stalled > stall_limit:
                    bland = True
            self.iterations += 1
            if t_flip <= t_row:
                self.beta -= t_flip * a
                self.at_upper[q] = not self.at_upper[q]
                continue
            ties = np.flatnonzero(t <= t_row + 1e-12 * max(1.0, t_row))
            if bland:
                r = int(ties[np.argmin(self.basis[ties])])
            else:
                r = int(ties[np.argmax(np.abs(a[ties]))])
            leaving = self.basis[r]
            entering_value = (self.hi[q] if self.at_upper[q] else self.lo[q]) + delta * t_row
            self.beta -= t_row * a
            self.at_upper[leaving] = a[r] < 0
            self.is_basic[leaving] = False
            self.basis[r] = q
            self.is_basic[q] = True
            self.at_upper[q] = False
            self.beta[r] = entering_value
            kernels.pivot(T, r, q)
        raise NumericalError(f"simplex did not terminate within {max_iter} iterations")

    def objective_fast(self):
        return float(self.cost[self.basis] @ self.beta)


def _check_reduced_costs(tab: _Tableau) -> bool:
    """Re-derive reduced costs from a fresh factorisation; True if still optimal."""
    B = tab.aug[:, tab.basis]
    y = np.linalg.solve(B.T, tab.cost[tab.basis])
    d = tab.cost - tab.aug.T @ y
    d[tab.basis] = 0.0
    movable = tab.hi > tab.lo
    bad = ((~tab.at_upper) & movable & (d > OPT_TOL)) | (tab.at_upper & (d < -OPT_TOL))
    bad &= ~tab.is_basic
    return not bad.any()


def _optimise(tab: _Tableau, max_iter: int):
    for _ in range(3):
        status = tab.run(max_iter)
        if status != "optimal":
            return status
        if _check_reduced_costs(tab):
            return status
        tab.refactor()
    return status


def solve_lp(lp: LinearProgram, max_iter: int | None = None) -> LpSolution:
    """Solve ``lp``; infeasibility and unboundedness are reported via ``status``."""
    if not isinstance(lp, LinearProgram):
        raise InvalidArgumentError("solve_lp expects a LinearProgram")
    tab = _Tableau(lp)
    m, n = lp.shape
    max_iter = max_iter or 50 * (m + tab.N + 10)
    scale = max(1.0, float(np.max(np.abs(lp.rhs))) if m else 1.0)

    if tab.first_art < tab.N:
        cost1 = np.zeros(tab.N)
        cost1[tab.first_art:] = -1.0
        tab.set_costs(cost1)
        status = _optimise(tab, max_iter)
        if status != "optimal":
            raise NumericalError(f"phase I ended with status {status}")
        arts = np.flatnonzero(tab.basis >= tab.first_art)
        if -tab.objective() > FEAS_TOL * scale:
            return LpSolution("infeasible", np.full(n, np.nan), np.nan, iterations=tab.iterations)
        # drive zero-valued artificials out of the basis where possible
        for r in arts:
            row = tab.T[r, : tab.first_art].copy()
            row[tab.is_basic[: tab.first_art]] = 0.0
            cand = np.flatnonzero(np.abs(row) > 1e-9)
            if cand.size:
                q = int(cand[np.argmax(np.abs(row[cand]))])
                leaving = tab.basis[r]
                value = tab.hi[q] if tab.at_upper[q] else tab.lo[q]
                tab.is_basic[leaving] = False
                tab.at_upper[leaving] = False
                tab.basis[r] = q
                tab.is_basic[q] = True
                tab.at_upper[q] = False
                tab.beta[r] = value
                kernels.pivot(tab.T, r, q)
        tab.hi[tab.first_art:] = 0.0

    tab.set_costs(tab.c)
    status = _optimise(tab, max_iter)
    if status == "unbounded":
        return LpSolution("unbounded", np.full(n, np.nan), np.inf, iterations=tab.iterations)

    B = tab.aug[:, tab.basis]
    xfull = tab.nonbasic_values()
    try:
        xfull[tab.basis] = np.linalg.solve(B, lp.rhs - tab.aug @ xfull)
        duals = np.linalg.solve(B.T, tab.c[tab.basis])
    except np.linalg.LinAlgError as exc:
        raise NumericalError("singular final basis") from exc
    x = np.clip(xfull[:n], lp.lo, lp.hi)
    return LpSolution("optimal", x, float(lp.objective @ x), duals, tab.iterations, tab.basis.copy())


def dual_objective(lp: LinearProgram, duals) -> float:
    """Lagrangian dual bound ``b^T y + sum_j max(d_j lo_j, d_j hi_j)`` with ``d = c - A^T y``.

    Valid (an upper bound on the primal maximum) whenever ``y`` has the
    correct sign on every inequality row.
    """
    y = np.asarray(duals, dtype=float)
    d = lp.objective - lp.A.T @ y
    return float(lp.rhs @ y + np.sum(np.maximum(d * lp.lo, d * lp.hi)))


def dual_sign_violation(lp: LinearProgram, duals) -> float:
    y = np.asarray(duals, dtype=float)
    senses = np.array(lp.senses)
    v = np.concatenate([-y[senses == "<="], y[senses == ">="], [0.0]])
    return float(max(v.max(), 0.0))


def to_cplex_lp(lp: LinearProgram) -> str:
    """Render ``lp`` in CPLEX LP text format."""
    names = lp.names or tuple(f"x{i}" for i in range(lp.shape[1]))

    def expr(coefs):
        parts = []
        for a, nm in zip(coefs, names):
            if a == 0:
                continue
            parts.append(f"{'-' if a < 0 else '+'} {abs(a):.17g} {nm}")
        if not parts:
            return "0 " + names[0] if names else "0"
        s = " ".join(parts)
        return s[2:] if s.startswith("+ ") else s

    lines = ["\\ generated by irsnet", "Maximize", f" obj: {expr(lp.objective)}", "Subject To"]
    for i, (row, sense, rhs) in enumerate(zip(lp.A, lp.senses, lp.rhs)):
        lines.append(f" c{i}: {expr(row)} {sense} {rhs:.17g}")
    lines.append("Bounds")
    for nm, lo, hi in zip(names, lp.lo, lp.hi):
        lines.append(f" {lo:.17g} <= {nm} <= {hi:.17g}")
    lines.append("End")
    return "\n".join(lines) + "\n"
