"""Hot numeric kernels, each with a numba and a vectorised numpy implementation.

The public names (``cascade_sums``, ``enumerate_p1_states``, ...) dispatch to
the backend chosen in :mod:`irsnet._accel`. Both implementations are kept in
``IMPLEMENTATIONS`` so the benchmark and the tests can call either one.
"""

from __future__ import annotations

import math

import numpy as np

from ._accel import HAVE_NUMBA, USE_NUMBA, njit

BEAM_CONST = math.pi**2 / 16.0


# --- Monte-Carlo cascaded channel sums -------------------------------------

def _cascade_sums_numpy(g, phasor, h):
    # out[t, n, j, k] = sum_m g[t, j, k, m] * phasor[t, j, k, m] * h[t, n, j, m]
    gp = g * phasor
    out = np.matmul(gp, h.transpose(0, 2, 3, 1))  # (T, J, K_user, K_bs)
    return np.ascontiguousarray(out.transpose(0, 3, 1, 2))


@njit(cache=True, nogil=True)
def _cascade_sums_numba(g, phasor, h):
    T, J, K, M = g.shape
    Kb = h.shape[1]
    out = np.zeros((T, Kb, J, K), dtype=np.complex128)
    for t in range(T):
        for j in range(J):
            for k in range(K):
                for n in range(Kb):
                    acc = 0.0 + 0.0j
                    for m in range(M):
                        acc += g[t, j, k, m] * phasor[t, j, k, m] * h[t, n, j, m]
                    out[t, n, j, k] = acc
    return out


# --- Exhaustive search over IRS-user associations (no power control) -------

def _digits(codes, J, radix):
    powers = radix ** np.arange(J - 1, -1, -1, dtype=np.int64)
    return (codes[:, None] // powers[None, :]) % radix


def _enumerate_p1_numpy(base, lin, q_own, quad, inv_gamma, chunk=1 << 16):
    J, K = lin.shape
    radix = K + 1
    total = radix**J
    best_val = -np.inf
    best_code = 0
    for start in range(0, total, chunk):
        codes = np.arange(start, min(start + chunk, total), dtype=np.int64)
        dig = _digits(codes, J, radix)
        obj = np.full(codes.size, np.inf)
        for k in range(K):
            mask = (dig == k + 1).astype(float)
            s_lin = mask @ lin[:, k]
            s_q = mask @ q_own[:, k]
            obj = np.minimum(obj, (base[k] + s_lin + quad * s_q * s_q) * inv_gamma[k])
        i = int(np.argmax(obj))
        if obj[i] > best_val:
            best_val = float(obj[i])
            best_code = int(codes[i])
    dig = _digits(np.array([best_code], dtype=np.int64), J, radix)[0]
    return best_val, dig - 1


@njit(cache=True, nogil=True)
def _enumerate_p1_numba(base, lin, q_own, quad, inv_gamma):
    J, K = lin.shape
    digit = np.zeros(J, dtype=np.int64)
    best = np.zeros(J, dtype=np.int64)
    s_lin = np.zeros(K)
    s_q = np.zeros(K)
    best_val = -np.inf
    total = (K + 1) ** J
    for _ in range(total):
        s_lin[:] = 0.0
        s_q[:] = 0.0
        for j in range(J):
            d = digit[j]
            if d > 0:
                s_lin[d - 1] += lin[j, d - 1]
                s_q[d - 1] += q_own[j, d - 1]
        obj = np.inf
        for k in range(K):
            v = (base[k] + s_lin[k] + quad * s_q[k] * s_q[k]) * inv_gamma[k]
            if v < obj:
                obj = v
        if obj > best_val:
            best_val = obj
            best[:] = digit
        # odometer, last IRS is the least significant digit
        j = J - 1
        while j >= 0:
            digit[j] += 1
            if digit[j] <= K:
                break
            digit[j] = 0
            j -= 1
    return best_val, best - 1


# --- Power iteration on non-negative matrices ------------------------------

def _power_iteration_numpy(mats, tol, max_iter, need_gap):
    """Batched shifted power iteration; returns (rho, x, iterations, converged)."""
    mats = np.asarray(mats, dtype=float)
    B, K, _ = mats.shape
    shift = mats.sum(axis=(1, 2)) / K
    x = np.ones((B, K))
    rho = np.zeros(B)
    prev = np.full(B, np.inf)
    hits = np.zeros(B, dtype=np.int64)
    iters = np.zeros(B, dtype=np.int64)
    done = shift == 0.0
    conv = done.copy()
    active = np.flatnonzero(~done)
    it = 0
    while active.size and it < max_iter:
        it += 1
        m = mats[active]
        xa = x[active]
        mx = np.einsum("bij,bj->bi", m, xa)
        s = shift[active]
        y = mx + s[:, None] * xa
        lam = y.sum(axis=1) / xa.sum(axis=1) - s
        ok = np.abs(lam - prev[active]) <= tol * np.maximum(np.abs(lam), 1e-3 * s)
        if need_gap:
            with np.errstate(divide="ignore", invalid="ignore"):
                r = mx / xa
            gap = r.max(axis=1) - r.min(axis=1)
            ok &= np.isfinite(gap) & (gap <= 1e3 * tol * np.maximum(np.abs(lam), 1e-3 * s))
        hits[active] = np.where(ok, hits[active] + 1, 0)
        prev[active] = lam
        rho[active] = lam
        x[active] = y / y.max(axis=1)[:, None]
        iters[active] = it
        fin = hits[active] >= 2
        conv[active[fin]] = True
        active = active[~fin]
    return rho, x, iters, conv


@njit(cache=True, nogil=True)
def _power_iteration_one(m, tol, max_iter, need_gap, x):
    K = m.shape[0]
    s = 0.0
    for i in range(K):
        for j in range(K):
            s += m[i, j]
    s /= K
    for i in range(K):
        x[i] = 1.0
    if s == 0.0:
        return 0.0, 0, True
    y = np.empty(K)
    mx = np.empty(K)
    prev = np.inf
    hits = 0
    lam = 0.0
    for it in range(1, max_iter + 1):
        sy = 0.0
        sx = 0.0
        ymax = 0.0
        for i in range(K):
            acc = 0.0
            for j in range(K):
                acc += m[i, j] * x[j]
            mx[i] = acc
            y[i] = acc + s * x[i]
            sy += y[i]
            sx += x[i]
            if y[i] > ymax:
                ymax = y[i]
        lam = sy / sx - s
        scale = max(abs(lam), 1e-3 * s)
        ok = abs(lam - prev) <= tol * scale
        if need_gap and ok:
            rmin = np.inf
            rmax = -np.inf
            for i in range(K):
                if x[i] <= 0.0:
                    rmin = -np.inf
                    break
                r = mx[i] / x[i]
                rmin = min(rmin, r)
                rmax = max(rmax, r)
            ok = rmax - rmin <= 1e3 * tol * scale
        hits = hits + 1 if ok else 0
        prev = lam
        for i in range(K):
            x[i] = y[i] / ymax
        if hits >= 2:
            return lam, it, True
    return lam, max_iter, False


@njit(cache=True, nogil=True)
def _power_iteration_numba(mats, tol, max_iter, need_gap):
    B, K, _ = mats.shape
    rho = np.zeros(B)
    x = np.ones((B, K))
    iters = np.zeros(B, dtype=np.int64)
    conv = np.zeros(B, dtype=np.bool_)
    for b in range(B):
        lam, it, ok = _power_iteration_one(mats[b], tol, max_iter, need_gap, x[b])
        rho[b] = lam
        iters[b] = it
        conv[b] = ok
    return rho, x, iters, conv


# --- Exhaustive search with power control ----------------------------------

def _ratio_stacks(sig, nu_sq, noise, p_max):
    """Stack of F + v e_k^T / p_max for each state and each k: (N, K, K, K)."""
    N, K = sig.shape
    F = nu_sq.T[None, :, :] / sig[:, :, None]  # F[b, k, n] = nu[n, k] / sig[b, k]
    v = noise / sig  # (N, K)
    stacks = np.repeat(F[:, None, :, :], K, axis=1)
    for k in range(K):
        stacks[:, k, :, k] += v / p_max
    return stacks


def _enumerate_p2_numpy(base, lin, q_own, quad, nu_sq, noise, p_max, tol, max_iter, chunk=1 << 13):
    J, K = lin.shape
    radix = K + 1
    total = radix**J
    best_obj = np.inf
    best_code = 0
    unconverged = 0
    for start in range(0, total, chunk):
        codes = np.arange(start, min(start + chunk, total), dtype=np.int64)
        dig = _digits(codes, J, radix)
        sig = np.empty((codes.size, K))
        for k in range(K):
            mask = (dig == k + 1).astype(float)
            s_q = mask @ q_own[:, k]
            sig[:, k] = base[k] + mask @ lin[:, k] + quad * s_q * s_q
        stacks = _ratio_stacks(sig, nu_sq, noise, p_max).reshape(-1, K, K)
        rho, _, _, conv = _power_iteration_numpy(stacks, tol, max_iter, False)
        unconverged += int(np.count_nonzero(~conv))
        obj = rho.reshape(codes.size, K).max(axis=1)
        i = int(np.argmin(obj))
        if obj[i] < best_obj:
            best_obj = float(obj[i])
            best_code = int(codes[i])
    dig = _digits(np.array([best_code], dtype=np.int64), J, radix)[0]
    return best_obj, dig - 1, unconverged


@njit(cache=True, nogil=True)
def _enumerate_p2_numba(base, lin, q_own, quad, nu_sq, noise, p_max, tol, max_iter):
    J, K = lin.shape
    digit = np.zeros(J, dtype=np.int64)
    best = np.zeros(J, dtype=np.int64)
    s_lin = np.zeros(K)
    s_q = np.zeros(K)
    sig = np.zeros(K)
    mat = np.zeros((K, K))
    x = np.ones(K)
    best_obj = np.inf
    unconverged = 0
    total = (K + 1) ** J
    for _ in range(total):
        s_lin[:] = 0.0
        s_q[:] = 0.0
        for j in range(J):
            d = digit[j]
            if d > 0:
                s_lin[d - 1] += lin[j, d - 1]
                s_q[d - 1] += q_own[j, d - 1]
        for k in range(K):
            sig[k] = base[k] + s_lin[k] + quad * s_q[k] * s_q[k]
        obj = -np.inf
        for kk in range(K):
            for k in range(K):
                for n in range(K):
                    mat[k, n] = nu_sq[n, k] / sig[k]
                mat[k, kk] += noise / sig[k] / p_max
            lam, it, ok = _power_iteration_one(mat, tol, max_iter, False, x)
            if not ok:
                unconverged += 1
            if lam > obj:
                obj = lam
        if obj < best_obj:
            best_obj = obj
            best[:] = digit
        j = J - 1
        while j >= 0:
            digit[j] += 1
            if digit[j] <= K:
                break
            digit[j] = 0
            j -= 1
    return best_obj, best - 1, unconverged


# --- Dense simplex pivot ---------------------------------------------------

def _pivot_numpy(T, r, q):
    T[r] /= T[r, q]
    col = T[:, q].copy()
    col[r] = 0.0
    nz = np.flatnonzero(col)
    if nz.size:
        T[nz] -= np.outer(col[nz], T[r])
    T[:, q] = 0.0
    T[r, q] = 1.0


@njit(cache=True, nogil=True)
def _pivot_numba(T, r, q):
    rows, cols = T.shape
    piv = T[r, q]
    for c in range(cols):
        T[r, c] /= piv
    for i in range(rows):
        if i == r:
            continue
        a = T[i, q]
        if a != 0.0:
            for c in range(cols):
                T[i, c] -= a * T[r, c]
            T[i, q] = 0.0
    T[r, q] = 1.0


IMPLEMENTATIONS = {
    "cascade_sums": {"numpy": _cascade_sums_numpy, "numba": _cascade_sums_numba},
    "enumerate_p1_states": {"numpy": _enumerate_p1_numpy, "numba": _enumerate_p1_numba},
    "power_iteration": {"numpy": _power_iteration_numpy, "numba": _power_iteration_numba},
    "enumerate_p2_states": {"numpy": _enumerate_p2_numpy, "numba": _enumerate_p2_numba},
    "pivot": {"numpy": _pivot_numpy, "numba": _pivot_numba},
}


def available_backends():
    return ("numpy", "numba") if HAVE_NUMBA else ("numpy",)


def _pick(name):
    return IMPLEMENTATIONS[name]["numba" if USE_NUMBA else "numpy"]


cascade_sums = _pick("cascade_sums")
enumerate_p1_states = _pick("enumerate_p1_states")
power_iteration = _pick("power_iteration")
enumerate_p2_states = _pick("enumerate_p2_states")
pivot = _pick("pivot")
