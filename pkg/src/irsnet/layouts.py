"""Scenario generators.

``paper-fig3`` is a clustered layout: four BS/user pairs on a 300 m square
with a ring of IRSs around every user.
"""

from __future__ import annotations

import math

import numpy as np

from .errors import InvalidArgumentError
from .geometry import (
    DEFAULT_BANDWIDTH_HZ,
    DEFAULT_CARRIER_HZ,
    DEFAULT_NOISE_DBM_PER_HZ,
    DEFAULT_PMAX_DBM,
    Scenario,
    dbm_to_watts,
    noise_power_from_density,
)

BS_HEIGHT = 15.0
GROUND_HEIGHT = 1.5
LAYOUTS = ("grid", "paper-fig3", "random")

CLUSTER_BS = np.array([[0.0, 0.0], [300.0, 0.0], [0.0, 300.0], [300.0, 300.0]])
CLUSTER_USERS = np.array([[60.0, 40.0], [160.0, 150.0], [50.0, 240.0], [250.0, 260.0]])


def _lift(xy, h):
    xy = np.asarray(xy, dtype=float).reshape(-1, 2)
    return np.c_[xy, np.full(xy.shape[0], h)]


def _scenario(bs, users, irs, M, seed, p_max_dbm, noise_dbm_per_hz, bandwidth, carrier):
    return Scenario(
        _lift(bs, BS_HEIGHT),
        _lift(users, GROUND_HEIGHT),
        _lift(irs, GROUND_HEIGHT),
        M,
        float(dbm_to_watts(p_max_dbm)),
        noise_power_from_density(noise_dbm_per_hz, bandwidth),
        carrier,
        bandwidth,
        seed,
    )


def _cluster(centres, owners, rng, r_min=5.0, r_max=20.0):
    """One point per entry of ``owners`` in an annulus around its centre."""
    r = rng.uniform(r_min, r_max, owners.size)
    phi = rng.uniform(0.0, 2.0 * math.pi, owners.size)
    return centres[owners] + np.c_[r * np.cos(phi), r * np.sin(phi)]


def _balanced_owners(K, J):
    return np.arange(J) % K


def _clustered_positions(J: int, seed: int):
    rng = np.random.default_rng(seed)
    owners = _balanced_owners(4, J)
    return CLUSTER_BS, CLUSTER_USERS, _cluster(CLUSTER_USERS, owners, rng)


def random_positions(K: int, J: int, seed: int):
    """Cells on a jittered square grid; each user 20-80 m from its BS, IRSs near users."""
    rng = np.random.default_rng(seed)
    side = math.ceil(math.sqrt(K))
    cells = np.array([(i % side, i // side) for i in range(K)], dtype=float) * 250.0
    bs = cells + rng.uniform(-40.0, 40.0, (K, 2))
    d = rng.uniform(20.0, 80.0, K)
    phi = rng.uniform(0.0, 2.0 * math.pi, K)
    users = bs + np.c_[d * np.cos(phi), d * np.sin(phi)]
    owners = rng.integers(0, K, J)
    return bs, users, _cluster(users, owners, rng, 3.0, 40.0)


def grid_positions(K: int, J: int, seed: int):
    """BSs on a 200 m grid, users at a fixed offset, IRSs on a regular lattice."""
    side = math.ceil(math.sqrt(K))
    bs = np.array([(i % side, i // side) for i in range(K)], dtype=float) * 200.0
    users = bs + np.array([50.0, 30.0])
    if J == 0:
        return bs, users, np.zeros((0, 2))
    lo = users.min(axis=0) - 20.0
    hi = users.max(axis=0) + 20.0
    n = math.ceil(math.sqrt(J))
    xs = np.linspace(lo[0], hi[0], n)
    ys = np.linspace(lo[1], hi[1], max(math.ceil(J / n), 1))
    pts = np.array([(x, y) for y in ys for x in xs])[:J]
    # dodge exact coincidences with users on small grids
    clash = (np.abs(pts[:, None, :] - users[None]).sum(axis=-1) == 0).any(axis=1)
    pts[clash] += 1.0
    return bs, users, pts


def make_scenario(
    layout: str,
    K: int,
    J: int,
    seed: int = 0,
    M: int = 100,
    p_max_dbm: float = DEFAULT_PMAX_DBM,
    noise_dbm_per_hz: float = DEFAULT_NOISE_DBM_PER_HZ,
    bandwidth: float = DEFAULT_BANDWIDTH_HZ,
    carrier: float = DEFAULT_CARRIER_HZ,
) -> Scenario:
    if K < 1 or J < 0:
        raise InvalidArgumentError("need K >= 1 and J >= 0")
    if layout == "paper-fig3":
        if K != 4:
            raise InvalidArgumentError("the paper-fig3 layout has exactly 4 BS/user pairs")
        bs, users, irs = _clustered_positions(J, seed)
    elif layout == "random":
        bs, users, irs = random_positions(K, J, seed)
    elif layout == "grid":
        bs, users, irs = grid_positions(K, J, seed)
    else:
        raise InvalidArgumentError(f"unknown layout {layout!r}; choose from {LAYOUTS}")
    return _scenario(bs, users, irs, M, seed, p_max_dbm, noise_dbm_per_hz, bandwidth, carrier)


def random_gains_scenario(K: int, J: int, seed: int, M: int = 100) -> Scenario:
    return make_scenario("random", K, J, seed, M)
