"""Network geometry and distance-dependent average power gains.

All powers are linear watts; dBm appears only in the JSON scenario format.
Index conventions used throughout the package:

* ``alpha_sq[n, k]`` BS ``n`` -> user ``k`` (direct link)
* ``beta_sq[n, j]``  BS ``n`` -> IRS ``j``
* ``eta_sq[j, k]``   IRS ``j`` -> user ``k``
* ``q[n, j, k]``     amplitude product ``beta[n, j] * eta[j, k]``
* ``a_coeff[j, k]``  ``(pi*sqrt(pi)/4) * alpha[k, k] * q[k, j, k] - q[k, j, k]**2``
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import InvalidArgumentError

#: pi * sqrt(pi) / 4, the cross-term constant of the effective channel power
CROSS_CONST = math.pi * math.sqrt(math.pi) / 4.0

DEFAULT_CARRIER_HZ = 2e9
DEFAULT_BANDWIDTH_HZ = 10e6
DEFAULT_NOISE_DBM_PER_HZ = -164.0
DEFAULT_PMAX_DBM = 40.0


def dbm_to_watts(dbm):
    return 10.0 ** ((np.asarray(dbm, dtype=float) - 30.0) / 10.0)


def watts_to_dbm(watts):
    return 10.0 * np.log10(np.asarray(watts, dtype=float)) + 30.0


def to_db(x):
    """Linear ratio to dB; zero maps to -inf without a warning."""
    x = np.asarray(x, dtype=float)
    with np.errstate(divide="ignore"):
        return 10.0 * np.log10(x)


def _frozen(a, dtype=float):
    a = np.array(a, dtype=dtype)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class Scenario:
    """Node placement and radio constants.

    User ``k`` is served by BS ``k``; the number of users equals the number
    of BSs.
    """

    bs_positions: np.ndarray
    user_positions: np.ndarray
    irs_positions: np.ndarray
    num_elements: int
    p_max: float
    noise_power: float
    carrier_freq: float = DEFAULT_CARRIER_HZ
    bandwidth: float = DEFAULT_BANDWIDTH_HZ
    rng_seed: int = 0

    def __post_init__(self):
        bs = np.asarray(self.bs_positions, dtype=float).reshape(-1, 3)
        users = np.asarray(self.user_positions, dtype=float).reshape(-1, 3)
        irs = np.asarray(self.irs_positions, dtype=float).reshape(-1, 3)
        if bs.shape[0] < 1:
            raise InvalidArgumentError("at least one BS is required")
        if bs.shape[0] != users.shape[0]:
            raise InvalidArgumentError(
                f"need one user per BS, got {bs.shape[0]} BSs and {users.shape[0]} users"
            )
        nodes = np.vstack([bs, users, irs])
        if not np.all(np.isfinite(nodes)):
            raise InvalidArgumentError("node positions must be finite")
        if np.unique(nodes, axis=0).shape[0] != nodes.shape[0]:
            raise InvalidArgumentError("two nodes share the exact same position")
        m = int(self.num_elements)
        if m != self.num_elements or m < 0:
            raise InvalidArgumentError(f"M must be a non-negative integer, got {self.num_elements!r}")
        if not self.p_max > 0:
            raise InvalidArgumentError("p_max must be positive")
        if not self.noise_power > 0:
            raise InvalidArgumentError("noise power must be positive")
        if not (self.carrier_freq > 0 and self.bandwidth > 0):
            raise InvalidArgumentError("carrier frequency and bandwidth must be positive")
        if int(self.rng_seed) < 0:
            raise InvalidArgumentError("rng_seed must be unsigned")
        object.__setattr__(self, "bs_positions", _frozen(bs))
        object.__setattr__(self, "user_positions", _frozen(users))
        object.__setattr__(self, "irs_positions", _frozen(irs))
        object.__setattr__(self, "num_elements", m)
        object.__setattr__(self, "rng_seed", int(self.rng_seed))

    @property
    def K(self) -> int:
        return self.bs_positions.shape[0]

    @property
    def J(self) -> int:
        return self.irs_positions.shape[0]

    def with_irs_subset(self, idx) -> "Scenario":
        """Copy keeping only the IRSs at indices ``idx`` (in that order)."""
        return Scenario(
            self.bs_positions,
            self.user_positions,
            self.irs_positions[list(idx)],
            self.num_elements,
            self.p_max,
            self.noise_power,
            self.carrier_freq,
            self.bandwidth,
            self.rng_seed,
        )

    def with_params(self, **changes) -> "Scenario":
        kw = {
            "bs_positions": self.bs_positions,
            "user_positions": self.user_positions,
            "irs_positions": self.irs_positions,
            "num_elements": self.num_elements,
            "p_max": self.p_max,
            "noise_power": self.noise_power,
            "carrier_freq": self.carrier_freq,
            "bandwidth": self.bandwidth,
            "rng_seed": self.rng_seed,
        }
        kw.update(changes)
        return Scenario(**kw)


@dataclass(frozen=True)
class LinkGains:
    """Average power gains of every link plus the derived cascaded terms."""

    alpha_sq: np.ndarray
    beta_sq: np.ndarray
    eta_sq: np.ndarray
    q: np.ndarray = field(repr=False)
    a_coeff: np.ndarray = field(repr=False)

    @property
    def K(self) -> int:
        return self.alpha_sq.shape[0]

    @property
    def J(self) -> int:
        return self.beta_sq.shape[1]

    @property
    def q_own(self) -> np.ndarray:
        """``q[k, j, k]`` arranged as a J x K matrix (BS k -> IRS j -> user k)."""
        k = np.arange(self.K)
        return self.q[k, :, k].T

    @property
    def q_sq_sum(self) -> np.ndarray:
        """``sum_j q[n, j, k]**2`` as a K x K matrix indexed ``[n, k]``."""
        return np.einsum("njk->nk", self.q**2)


def path_loss(distance_3d, carrier_freq):
    """Linear power gain of the UMa LOS pre-breakpoint model.

    ``PL_dB = 28.0 + 22 log10(d) + 20 log10(f_GHz)`` and the gain is
    ``10**(-PL_dB/10)``. Accepts scalars or arrays of distances in meters.
    """
    d = np.asarray(distance_3d, dtype=float)
    f = float(carrier_freq)
    if not np.all(d > 0) or not np.all(np.isfinite(d)):
        raise InvalidArgumentError("distance must be positive and finite")
    if not f > 0:
        raise InvalidArgumentError("carrier frequency must be positive")
    pl_db = 28.0 + 22.0 * np.log10(d) + 20.0 * np.log10(f / 1e9)
    gain = 10.0 ** (-pl_db / 10.0)
    return float(gain) if gain.ndim == 0 else gain


def _pairwise_distance(a, b):
    return np.linalg.norm(a[:, None, :] - b[None, :, :], axis=-1)


def _assemble(alpha_sq, beta_sq, eta_sq) -> LinkGains:
    k_idx = np.arange(alpha_sq.shape[0])
    q = np.sqrt(beta_sq)[:, :, None] * np.sqrt(eta_sq)[None, :, :]
    alpha_kk = np.sqrt(alpha_sq[k_idx, k_idx])
    q_own = q[k_idx, :, k_idx].T  # (J, K)
    a_coeff = CROSS_CONST * alpha_kk[None, :] * q_own - q_own**2
    return LinkGains(
        _frozen(alpha_sq), _frozen(beta_sq), _frozen(eta_sq), _frozen(q), _frozen(a_coeff)
    )


def build_link_gains(scenario: Scenario) -> LinkGains:
    """Evaluate the path-loss model on every BS-user, BS-IRS and IRS-user link."""
    f = scenario.carrier_freq
    alpha_sq = path_loss(_pairwise_distance(scenario.bs_positions, scenario.user_positions), f)
    alpha_sq = np.atleast_2d(alpha_sq)
    if scenario.J:
        beta_sq = np.atleast_2d(path_loss(_pairwise_distance(scenario.bs_positions, scenario.irs_positions), f))
        eta_sq = np.atleast_2d(path_loss(_pairwise_distance(scenario.irs_positions, scenario.user_positions), f))
    else:
        beta_sq = np.zeros((scenario.K, 0))
        eta_sq = np.zeros((0, scenario.K))
    return _assemble(alpha_sq, beta_sq, eta_sq)


def synthetic_gains(alpha_sq, beta_sq, eta_sq) -> LinkGains:
    """Build :class:`LinkGains` directly from gain matrices, bypassing geometry."""
    alpha_sq = np.atleast_2d(np.asarray(alpha_sq, dtype=float))
    beta_sq = np.asarray(beta_sq, dtype=float)
    eta_sq = np.asarray(eta_sq, dtype=float)
    K = alpha_sq.shape[0]
    if alpha_sq.shape != (K, K):
        raise InvalidArgumentError(f"alpha_sq must be square, got {alpha_sq.shape}")
    if beta_sq.ndim != 2 or eta_sq.ndim != 2:
        raise InvalidArgumentError("beta_sq and eta_sq must be matrices")
    if beta_sq.shape[0] != K or eta_sq.shape[1] != K:
        raise InvalidArgumentError("beta_sq must be K x J and eta_sq J x K")
    if beta_sq.shape[1] != eta_sq.shape[0]:
        raise InvalidArgumentError(
            f"IRS count mismatch: beta_sq has {beta_sq.shape[1]}, eta_sq has {eta_sq.shape[0]}"
        )
    for name, m in (("alpha_sq", alpha_sq), ("beta_sq", beta_sq), ("eta_sq", eta_sq)):
        if not (np.all(np.isfinite(m)) and np.all(m > 0)):
            raise InvalidArgumentError(f"{name} entries must be positive and finite")
    return _assemble(alpha_sq, beta_sq, eta_sq)


# --- JSON scenario format -------------------------------------------------

def noise_power_from_density(noise_dbm_per_hz: float, bandwidth_hz: float) -> float:
    return float(10.0 ** ((noise_dbm_per_hz - 30.0) / 10.0) * bandwidth_hz)


def scenario_to_dict(s: Scenario) -> dict:
    noise_dbm_hz = 10.0 * math.log10(s.noise_power / s.bandwidth) + 30.0
    return {
        "bs": s.bs_positions.tolist(),
        "users": s.user_positions.tolist(),
        "irs": s.irs_positions.tolist(),
        "M": s.num_elements,
        "p_max_dbm": round(float(watts_to_dbm(s.p_max)), 12),
        "noise_dbm_per_hz": round(noise_dbm_hz, 12),
        "bandwidth_hz": s.bandwidth,
        "carrier_ghz": s.carrier_freq / 1e9,
        "seed": s.rng_seed,
    }


def scenario_from_dict(d: dict) -> Scenario:
    missing = {"bs", "users", "irs", "M", "p_max_dbm", "noise_dbm_per_hz", "bandwidth_hz", "carrier_ghz", "seed"} - set(d)
    if missing:
        raise InvalidArgumentError(f"scenario JSON missing keys: {sorted(missing)}")
    bw = float(d["bandwidth_hz"])
    return Scenario(
        bs_positions=np.asarray(d["bs"], dtype=float),
        user_positions=np.asarray(d["users"], dtype=float),
        irs_positions=np.asarray(d["irs"], dtype=float).reshape(-1, 3),
        num_elements=d["M"],
        p_max=float(dbm_to_watts(d["p_max_dbm"])),
        noise_power=noise_power_from_density(float(d["noise_dbm_per_hz"]), bw),
        carrier_freq=float(d["carrier_ghz"]) * 1e9,
        bandwidth=bw,
        rng_seed=int(d["seed"]),
    )


def dump_scenario(s: Scenario) -> str:
    return json.dumps(scenario_to_dict(s), indent=2, sort_keys=True) + "\n"


def save_scenario(s: Scenario, path) -> None:
    Path(path).write_text(dump_scenario(s))


def load_scenario(path) -> Scenario:
    return scenario_from_dict(json.loads(Path(path).read_text()))
