"""Optimal BS power control for a fixed IRS-user association.

With the association fixed the max-min SINR problem is the classic SINR
balancing problem: the optimum equalises all SINRs, its value is the
reciprocal of a Perron root, and the powers are the matching Perron vector
scaled so that one BS transmits at ``p_max``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import kernels
from .analytics import _lam_matrix, effective_signal_powers, interference_matrix
from .errors import InvalidArgumentError, NumericalError
from .geometry import LinkGains

EIG_TOL = 1e-12
EIG_MAX_ITER = 100_000


@dataclass(frozen=True)
class PowerAllocation:
    p: np.ndarray
    p_max: float | None = None

    def __post_init__(self):
        p = np.array(self.p, dtype=float).reshape(-1)
        if np.any(p < 0) or not np.all(np.isfinite(p)):
            raise InvalidArgumentError("powers must be finite and non-negative")
        if self.p_max is not None and np.any(p > self.p_max * (1 + 1e-12)):
            raise InvalidArgumentError("powers exceed p_max")
        p.setflags(write=False)
        object.__setattr__(self, "p", p)


@dataclass(frozen=True)
class RatioSystem:
    """Channel-gain ratio matrix ``f_tilde`` and noise ratio vector ``v_tilde``."""

    f_tilde: np.ndarray
    v_tilde: np.ndarray

    def stacked(self, p_max: float) -> np.ndarray:
        """``f_tilde + v_tilde e_k^T / p_max`` for every ``k``, shape (K, K, K)."""
        K = self.v_tilde.size
        out = np.repeat(self.f_tilde[None], K, axis=0)
        for k in range(K):
            out[k, :, k] += self.v_tilde / p_max
        return out


def ratio_system_from_powers(signal_power, nu_sq, noise_power) -> RatioSystem:
    sig = np.asarray(signal_power, dtype=float)
    f = nu_sq.T / sig[:, None]
    np.fill_diagonal(f, 0.0)
    return RatioSystem(f, noise_power / sig)


def build_ratio_system(assoc, gains: LinkGains, M: int, noise_power: float) -> RatioSystem:
    sig = effective_signal_powers(_lam_matrix(assoc, gains), gains, M)
    return ratio_system_from_powers(sig, interference_matrix(gains, M), noise_power)


def _check_nonneg_square(m) -> np.ndarray:
    m = np.asarray(m, dtype=float)
    if m.ndim != 2 or m.shape[0] != m.shape[1] or m.shape[0] == 0:
        raise InvalidArgumentError("expected a non-empty square matrix")
    if not np.all(np.isfinite(m)) or np.any(m < 0):
        raise InvalidArgumentError("matrix entries must be finite and non-negative")
    return m


def spectral_radius(m, tol: float = EIG_TOL, max_iter: int = EIG_MAX_ITER) -> float:
    """Dominant eigenvalue of a non-negative matrix by shifted power iteration."""
    m = _check_nonneg_square(m)
    rho, _, iters, conv = kernels.power_iteration(m[None], tol, max_iter, False)
    if not conv[0]:
        raise NumericalError(f"power iteration did not converge after {int(iters[0])} iterations")
    return float(max(rho[0], 0.0))


def spectral_radii(mats, tol: float = EIG_TOL, max_iter: int = EIG_MAX_ITER) -> np.ndarray:
    """Batched :func:`spectral_radius` over a (B, K, K) stack."""
    mats = np.ascontiguousarray(mats, dtype=float)
    rho, _, iters, conv = kernels.power_iteration(mats, tol, max_iter, False)
    if not np.all(conv):
        b = int(np.flatnonzero(~conv)[0])
        raise NumericalError(f"power iteration did not converge for matrix {b} after {int(iters[b])} iterations")
    return np.maximum(rho, 0.0)


def is_irreducible(m) -> bool:
    m = np.asarray(m) > 0
    K = m.shape[0]
    reach = np.eye(K, dtype=bool) | m
    for _ in range(int(np.ceil(np.log2(max(K, 2))))):
        reach = reach | ((reach.astype(np.int64) @ reach.astype(np.int64)) > 0)
    return bool(reach.all())


def perron_left_eigenvector(m, tol: float = EIG_TOL, max_iter: int = EIG_MAX_ITER) -> np.ndarray:
    """Positive ``x`` with ``x^T m = rho(m) x^T``, scaled so that ``max(x) == 1``."""
    m = _check_nonneg_square(m)
    if not m.any() or not is_irreducible(m):
        raise InvalidArgumentError("matrix is reducible; the Perron vector is not unique/positive")
    mt = np.ascontiguousarray(m.T)
    _, x, iters, conv = kernels.power_iteration(mt[None], tol, max_iter, True)
    if not conv[0]:
        raise NumericalError(f"eigenvector iteration did not converge after {int(iters[0])} iterations")
    x = x[0] / np.max(x[0])
    if np.any(x <= 0):
        raise NumericalError("Perron vector has non-positive entries")
    return x


def perron_right_eigenvector(m, tol: float = EIG_TOL, max_iter: int = EIG_MAX_ITER) -> np.ndarray:
    """Positive ``x`` with ``m x = rho(m) x``."""
    return perron_left_eigenvector(np.asarray(m, dtype=float).T, tol, max_iter)


def _balancing(rs: RatioSystem, p_max: float):
    stacks = rs.stacked(p_max)
    rho = spectral_radii(stacks)
    i = int(np.argmax(rho))  # first maximiser
    return rho, i, stacks[i]


def optimal_common_sinr(
    assoc, gains: LinkGains, M: int, noise_power: float, p_max: float, simplified: bool = False
) -> tuple[float, int | None]:
    """Max-min SINR achievable by power control for this association.

    Returns ``(gamma, i)`` where ``i`` is the BS that transmits at full
    power. ``simplified=True`` drops the noise term and uses the single
    spectral radius of ``f_tilde`` (the high-SNR value); ``i`` is then None.
    """
    if not p_max > 0:
        raise InvalidArgumentError("p_max must be positive")
    rs = build_ratio_system(assoc, gains, M, noise_power)
    if simplified:
        rho = spectral_radius(rs.f_tilde)
        return (np.inf if rho == 0 else 1.0 / rho), None
    rho, i, _ = _balancing(rs, p_max)
    return 1.0 / rho[i], i


def powers_for_ratio_system(rs: RatioSystem, p_max: float) -> tuple[np.ndarray, float, int]:
    rho, i, mat = _balancing(rs, p_max)
    # P satisfies mat @ P = rho * P, i.e. the Perron vector of mat acting on the right
    x = perron_right_eigenvector(mat)
    p = p_max * x / x[i]
    p[i] = p_max
    return p, 1.0 / rho[i], i


def optimal_powers(assoc, gains: LinkGains, M: int, noise_power: float, p_max: float) -> PowerAllocation:
    """Power vector attaining :func:`optimal_common_sinr`; BS ``i`` transmits at ``p_max``."""
    rs = build_ratio_system(assoc, gains, M, noise_power)
    p, _, _ = powers_for_ratio_system(rs, p_max)
    return PowerAllocation(np.minimum(p, p_max), p_max)
