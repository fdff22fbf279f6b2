"""Closed-form average SINRs, their large-M behaviour and thresholds on M."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, NamedTuple

import numpy as np

from .errors import DegenerateInstanceError, InvalidArgumentError, UnsupportedRegimeError
from .geometry import LinkGains

BEAM_CONST = math.pi**2 / 16.0


@dataclass(frozen=True)
class Association:
    """Binary J x K IRS-user association matrix; each IRS serves at most one user."""

    lam: np.ndarray

    def __post_init__(self):
        lam = np.array(self.lam, dtype=np.int8)
        if lam.ndim != 2:
            raise InvalidArgumentError("association must be a J x K matrix")
        if not np.all((lam == 0) | (lam == 1)):
            raise InvalidArgumentError("association entries must be 0 or 1")
        if lam.shape[0] and np.any(lam.sum(axis=1) > 1):
            raise InvalidArgumentError("an IRS may be associated with at most one user")
        lam.setflags(write=False)
        object.__setattr__(self, "lam", lam)

    @property
    def J(self) -> int:
        return self.lam.shape[0]

    @property
    def K(self) -> int:
        return self.lam.shape[1]

    @classmethod
    def from_assignment(cls, assignment, K: int) -> "Association":
        """From a length-J vector of user indices, ``-1`` meaning unassigned."""
        a = np.asarray(assignment, dtype=int).reshape(-1)
        if np.any((a < -1) | (a >= K)):
            raise InvalidArgumentError(f"assignment entries must lie in [-1, {K - 1}]")
        lam = np.zeros((a.size, K), dtype=np.int8)
        rows = np.flatnonzero(a >= 0)
        lam[rows, a[rows]] = 1
        return cls(lam)

    @classmethod
    def empty(cls, J: int, K: int) -> "Association":
        return cls(np.zeros((J, K), dtype=np.int8))

    @property
    def assignment(self) -> np.ndarray:
        a = np.full(self.J, -1, dtype=int)
        j, k = np.nonzero(self.lam)
        a[j] = k
        return a

    def moved(self, j: int, k: int) -> "Association":
        """Copy with IRS ``j`` reassigned to user ``k`` (``-1`` unassigns)."""
        a = self.assignment
        a[j] = k
        return Association.from_assignment(a, self.K)

    def __eq__(self, other):
        return isinstance(other, Association) and np.array_equal(self.lam, other.lam)

    def __hash__(self):
        return hash((self.lam.shape, self.lam.tobytes()))


@dataclass(frozen=True)
class SinrReport:
    per_user: np.ndarray
    common: float
    bottleneck: int

    @classmethod
    def from_sinrs(cls, sinrs) -> "SinrReport":
        s = np.asarray(sinrs, dtype=float)
        kb = int(np.argmin(s))  # argmin returns the first minimiser
        return cls(s, float(s[kb]), kb)


@dataclass(frozen=True)
class ThresholdTerms:
    """Per-user terms of the crossover thresholds.

    ``own_scattered`` is the M-linear part of the user's own effective
    channel power, ``interf_scattered`` the M-linear part of its
    interference and ``interf_direct`` noise plus direct interference.
    """

    own_scattered: float
    interf_scattered: float
    interf_direct: float


class CrossoverBounds(NamedTuple):
    exact: float
    relaxed: float


def _lam_matrix(assoc, gains: LinkGains) -> np.ndarray:
    lam = np.asarray(getattr(assoc, "lam", assoc), dtype=float)
    if lam.shape != (gains.J, gains.K):
        raise InvalidArgumentError(f"association shape {lam.shape} != (J, K) = {(gains.J, gains.K)}")
    return lam


def _powers_vector(powers, K: int) -> np.ndarray:
    p = np.asarray(getattr(powers, "p", powers), dtype=float)
    if p.ndim == 0:
        p = np.full(K, float(p))
    if p.shape != (K,):
        raise InvalidArgumentError(f"need {K} transmit powers, got shape {p.shape}")
    if np.any(p < 0) or not np.all(np.isfinite(p)):
        raise InvalidArgumentError("transmit powers must be finite and non-negative")
    return p


def _check_M(M) -> int:
    m = int(M)
    if m != M or m < 0:
        raise InvalidArgumentError(f"M must be a non-negative integer, got {M!r}")
    return m


def _check_user(k, K):
    if not 0 <= k < K:
        raise InvalidArgumentError(f"user index {k} out of range for K={K}")


def effective_signal_power(lambda_k, gains: LinkGains, k: int, M: int) -> float:
    """Effective BS k -> user k channel power for the association column ``lambda_k``.

    Direct power, plus ``M`` times the scattered and beamforming cross
    terms, plus the quadratic passive-beamforming term.
    """
    _check_user(k, gains.K)
    M = _check_M(M)
    lam = np.asarray(lambda_k, dtype=float).reshape(-1)
    if lam.shape != (gains.J,):
        raise InvalidArgumentError(f"lambda_k must have length J={gains.J}")
    q = gains.q[k, :, k]
    beam = float(lam @ q)
    return float(
        gains.alpha_sq[k, k]
        + M * (np.sum(q**2) + lam @ gains.a_coeff[:, k])
        + M * M * BEAM_CONST * beam * beam
    )


def effective_signal_powers(assoc, gains: LinkGains, M: int) -> np.ndarray:
    """Vector of effective channel powers for all users under ``assoc``."""
    M = _check_M(M)
    lam = _lam_matrix(assoc, gains)
    q_own = gains.q_own
    k = np.arange(gains.K)
    beam = np.einsum("jk,jk->k", lam, q_own)
    return (
        gains.alpha_sq[k, k]
        + M * (np.sum(q_own**2, axis=0) + np.einsum("jk,jk->k", lam, gains.a_coeff))
        + M * M * BEAM_CONST * beam**2
    )


def effective_interference_power(gains: LinkGains, n: int, k: int, M: int) -> float:
    """Average power from co-channel BS ``n`` at user ``k``; independent of the association."""
    _check_user(n, gains.K)
    _check_user(k, gains.K)
    if n == k:
        raise InvalidArgumentError("interferer index must differ from the user index")
    M = _check_M(M)
    return float(gains.alpha_sq[n, k] + M * np.sum(gains.q[n, :, k] ** 2))


def interference_matrix(gains: LinkGains, M: int) -> np.ndarray:
    """``nu_sq[n, k]`` for all ``n != k``; the diagonal is zero."""
    M = _check_M(M)
    nu = gains.alpha_sq + M * gains.q_sq_sum
    np.fill_diagonal(nu, 0.0)
    return nu


def user_sinrs(signal_power: np.ndarray, powers: np.ndarray, nu_sq: np.ndarray, noise_power: float) -> np.ndarray:
    """Per-user SINR from effective signal powers and the interference matrix."""
    denom = noise_power + powers @ nu_sq
    if np.any(denom <= 0):
        raise InvalidArgumentError("zero noise plus interference: SINR undefined")
    return powers * signal_power / denom


def average_sinr(assoc, powers, gains: LinkGains, M: int, noise_power: float) -> SinrReport:
    """Closed-form average SINR of every user."""
    if noise_power < 0:
        raise InvalidArgumentError("noise power must be non-negative")
    p = _powers_vector(powers, gains.K)
    sig = effective_signal_powers(assoc, gains, M)
    return SinrReport.from_sinrs(user_sinrs(sig, p, interference_matrix(gains, M), noise_power))


def no_irs_sinr(powers, gains: LinkGains, noise_power: float) -> SinrReport:
    """Benchmark SINRs of the same network without any IRS."""
    return average_sinr(np.zeros((gains.J, gains.K)), powers, gains, 0, noise_power)


def common_sinr_p1(assoc, gains: LinkGains, M: int, p_max: float, noise_power: float) -> float:
    """Network common SINR with every BS at full power."""
    return average_sinr(assoc, np.full(gains.K, p_max), gains, M, noise_power).common


def _interferer_sums(gains: LinkGains, p: np.ndarray, k: int, noise_power: float):
    others = np.arange(gains.K) != k
    C = float(p[others] @ gains.q_sq_sum[others, k])
    D = float(noise_power + p[others] @ gains.alpha_sq[others, k])
    return C, D


def scattering_only_limit(gains: LinkGains, powers, k: int) -> float:
    """Limit of the all-scattering SINR of user ``k`` as M grows without bound."""
    _check_user(k, gains.K)
    p = _powers_vector(powers, gains.K)
    C, _ = _interferer_sums(gains, p, k, 0.0)
    if C <= 0:
        raise DegenerateInstanceError("no scattered interference: the limit is unbounded")
    return float(p[k] * gains.q_sq_sum[k, k] / C)


def scattering_monotone_increasing(gains: LinkGains, powers, k: int, noise_power: float) -> bool:
    """Whether the all-scattering SINR of user ``k`` strictly increases with M.

    Compares the ratio of own to interfering scattered power against the
    no-IRS signal-to-interference-plus-noise ratio; equality counts as not
    increasing.
    """
    _check_user(k, gains.K)
    p = _powers_vector(powers, gains.K)
    C, D = _interferer_sums(gains, p, k, noise_power)
    # cross-multiplied to avoid dividing by a zero C
    return bool(gains.q_sq_sum[k, k] * D > gains.alpha_sq[k, k] * C)


def threshold_terms(
    gains: LinkGains, powers, k: int, noise_power: float, associated_irs: Iterable[int] | None = None
) -> ThresholdTerms:
    _check_user(k, gains.K)
    p = _powers_vector(powers, gains.K)
    idx = [] if associated_irs is None else list(associated_irs)
    for j in idx:
        if not 0 <= j < gains.J:
            raise InvalidArgumentError(f"IRS index {j} out of range")
    B = float(gains.q_sq_sum[k, k] + sum(gains.a_coeff[j, k] for j in idx))
    C, D = _interferer_sums(gains, p, k, noise_power)
    return ThresholdTerms(B, C, D)


def _need_scattered_interference(terms: ThresholdTerms):
    if terms.interf_scattered <= 0:
        raise DegenerateInstanceError("C = 0: no scattered interference, threshold undefined")


def dip_interval_end(terms: ThresholdTerms, q_ki: float, alpha_sq_kk: float) -> float:
    """Largest M over which the beamformed SINR can still be decreasing.

    Returns 0 when the SINR increases with M from the start.
    """
    _need_scattered_interference(terms)
    if not q_ki > 0:
        raise InvalidArgumentError("q_ki must be positive")
    B, C, D = terms.own_scattered, terms.interf_scattered, terms.interf_direct
    if C * alpha_sq_kk <= B * D:
        return 0.0
    return math.sqrt(D * D / (C * C) + 16.0 * (C * alpha_sq_kk - B * D) / (math.pi**2 * q_ki**2 * C)) - D / C


def crossover_M_single(terms: ThresholdTerms, q_ki: float, alpha_sq_kk: float) -> CrossoverBounds:
    """Bounds on M beyond which beamforming beats the no-IRS SINR.

    ``exact`` keeps the scattered-signal term; ``relaxed`` drops it and is
    never smaller.
    """
    _need_scattered_interference(terms)
    if not (q_ki > 0 and terms.interf_direct > 0):
        raise InvalidArgumentError("q_ki and D must be positive")
    B, C, D = terms.own_scattered, terms.interf_scattered, terms.interf_direct
    c = 16.0 / math.pi**2
    exact = max(c * (alpha_sq_kk * C / (q_ki**2 * D) - B / q_ki**2), 0.0)
    relaxed = c * alpha_sq_kk * C / (q_ki**2 * D)
    return CrossoverBounds(exact, max(relaxed, exact))


def crossover_M_network(gains: LinkGains, p_max: float, noise_power: float, assoc=None) -> float:
    """M above which a balanced association beats the no-IRS network.

    Without ``assoc`` this is the universal bound valid for any association
    giving every user at least ``J // K`` IRSs; it uses the weakest single
    reflected link of each user. With ``assoc`` the actual beamforming sum
    of that association replaces the worst-case term, which is much tighter
    when IRSs are clustered.
    """
    K, J = gains.K, gains.J
    if assoc is None and J < K:
        raise UnsupportedRegimeError(f"needs at least as many IRSs as users (J={J} < K={K})")
    if K == 1:
        return 0.0
    if assoc is None:
        beam_sq = (J // K) ** 2 * np.min(gains.q_own**2, axis=0)
    else:
        lam = _lam_matrix(assoc, gains)
        beam_sq = np.einsum("jk,jk->k", lam, gains.q_own) ** 2
        if np.any(beam_sq <= 0):
            raise UnsupportedRegimeError("every user needs at least one associated IRS")
    worst = 0.0
    for k in range(K):
        others = np.arange(K) != k
        scat = p_max * np.sum(gains.q_sq_sum[others, k])
        direct = noise_power + p_max * np.sum(gains.alpha_sq[others, k])
        worst = max(worst, gains.alpha_sq[k, k] * scat / (beam_sq[k] * direct))
    return float(16.0 / math.pi**2 * worst)


def beamforming_asymptote(terms: ThresholdTerms, q_ki: float, p_k: float, M: float) -> float:
    """Linear-in-M asymptote of the beamformed SINR."""
    _need_scattered_interference(terms)
    return float(p_k * (math.pi**2 * q_ki**2 * M + terms.own_scattered) / (16.0 * terms.interf_scattered))
