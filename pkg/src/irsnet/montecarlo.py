"""Monte-Carlo check of the closed-form average powers under Rayleigh fading.

Every small-scale coefficient is circularly-symmetric complex Gaussian with
the link's average gain as variance. Normals come from numpy's PCG64
generator (``standard_normal``, ziggurat method); batches use child seeds
spawned from one ``SeedSequence`` so results depend only on ``seed`` and
the trial count. Batch sums are merged with compensated summation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import kernels
from .analytics import (
    SinrReport,
    _check_M,
    _lam_matrix,
    _powers_vector,
    effective_signal_powers,
    interference_matrix,
)
from .errors import InvalidArgumentError
from .geometry import LinkGains

BATCH = 500
TWO_PI = 2.0 * math.pi


@dataclass(frozen=True)
class ChannelRealization:
    """A stack of ``T`` independent channel draws.

    ``f[t, n, k]`` BS n -> user k, ``h[t, n, j, m]`` BS n -> IRS j element m,
    ``g[t, j, k, m]`` IRS j element m -> user k. ``theta[t, j, m]`` are the
    phase shifts configured on the IRSs; ``phasor[t, j, k, m]`` is the phase
    factor user k effectively sees through IRS j (equal to ``exp(1j*theta)``
    except in the pure-uniform mode of :func:`align_phases`).
    """

    f: np.ndarray
    h: np.ndarray
    g: np.ndarray
    theta: np.ndarray | None = None
    phasor: np.ndarray | None = None

    @property
    def trials(self) -> int:
        return self.f.shape[0]

    @property
    def M(self) -> int:
        return self.h.shape[-1]


def _cscg(rng, var, shape):
    z = rng.standard_normal(shape + (2,)).view(np.complex128)[..., 0]
    z *= np.sqrt(var / 2.0)
    return z


def _draw(gains: LinkGains, M: int, T: int, rng) -> ChannelRealization:
    K, J = gains.K, gains.J
    f = _cscg(rng, gains.alpha_sq[None], (T, K, K))
    h = _cscg(rng, gains.beta_sq[None, :, :, None], (T, K, J, M))
    g = _cscg(rng, gains.eta_sq[None, :, :, None], (T, J, K, M))
    return ChannelRealization(f, h, g)


def sample_realization(gains: LinkGains, M: int, seed: int, trials: int = 1) -> ChannelRealization:
    """Draw ``trials`` independent realizations (phases not yet configured)."""
    M = _check_M(M)
    if M < 1:
        raise InvalidArgumentError("Monte-Carlo sampling needs M >= 1")
    if trials < 1:
        raise InvalidArgumentError("trials must be >= 1")
    return _draw(gains, M, int(trials), np.random.default_rng(seed))


def _unit(z):
    a = np.abs(z)
    return np.where(a > 0, z / np.where(a > 0, a, 1.0), 1.0)


def align_phases(real: ChannelRealization, assoc, rng=None, uniform: bool = False) -> ChannelRealization:
    """Configure IRS phases.

    An IRS serving user k cancels the phase of each reflected path so that
    it adds coherently with the direct BS k -> user k channel. Unassigned
    IRSs get independent uniform phases. With ``uniform=True`` every
    IRS/user pair that is not associated also sees fresh uniform phases, the
    idealised independence assumption behind the closed forms.
    """
    rng = np.random.default_rng(rng)
    T, J, K, M = real.g.shape
    lam = np.asarray(getattr(assoc, "lam", assoc))
    if lam.shape != (J, K):
        raise InvalidArgumentError(f"association must be {J} x {K}")
    rot = np.exp(1j * rng.uniform(0.0, TWO_PI, (T, J, M)))
    for j in range(J):
        ks = np.flatnonzero(lam[j])
        if ks.size:
            k = int(ks[0])
            rot[:, j, :] = (
                _unit(real.f[:, k, k])[:, None] * np.conj(_unit(real.g[:, j, k, :])) * np.conj(_unit(real.h[:, k, j, :]))
            )
    theta = np.mod(np.angle(rot), TWO_PI)
    if uniform:
        phasor = np.exp(1j * rng.uniform(0.0, TWO_PI, (T, J, K, M)))
        for j, k in zip(*np.nonzero(lam)):
            phasor[:, j, k, :] = rot[:, j, :]
    else:
        phasor = np.repeat(rot[:, :, None, :], K, axis=2)
    return ChannelRealization(real.f, real.h, real.g, theta, phasor)


def effective_channels(real: ChannelRealization) -> tuple[np.ndarray, np.ndarray]:
    """``(c, cascade)``: total channel ``c[t, n, k]`` and per-IRS reflected sums ``cascade[t, n, j, k]``."""
    if real.phasor is None:
        raise InvalidArgumentError("phases not configured; call align_phases first")
    cascade = kernels.cascade_sums(
        np.ascontiguousarray(real.g), np.ascontiguousarray(real.phasor), np.ascontiguousarray(real.h)
    )
    return real.f + cascade.sum(axis=2), cascade


class _Compensated:
    """Neumaier summation over numpy arrays of partial sums."""

    def __init__(self, shape):
        self.s = np.zeros(shape)
        self.c = np.zeros(shape)

    def add(self, x):
        t = self.s + x
        big = np.abs(self.s) >= np.abs(x)
        self.c += np.where(big, (self.s - t) + x, (x - t) + self.s)
        self.s = t

    @property
    def value(self):
        return self.s + self.c


@dataclass(frozen=True)
class EmpiricalPowers:
    signal: np.ndarray
    interference: np.ndarray
    signal_se: np.ndarray
    interference_se: np.ndarray
    scatter_power: np.ndarray  # (K, J, K) mean |reflected sum|^2
    scatter_mask: np.ndarray  # True where the path is not phase-aligned
    trials: int


def _mean_se(s1, s2, n):
    mean = s1 / n
    if n < 2:
        return mean, np.full_like(mean, np.inf)
    var = np.maximum(s2 / n - mean**2, 0.0) * n / (n - 1)
    return mean, np.sqrt(var / n)


def empirical_powers(
    assoc, powers, gains: LinkGains, M: int, trials: int, seed: int, uniform: bool = False, batch: int = BATCH
) -> EmpiricalPowers:
    """Sample means of the received signal and interference powers of every user.

    Transmit symbols are unit-power and independent, so their expectation is
    taken analytically: the signal power of user k is ``P_k |c_kk|^2`` and
    the interference power is ``sum_{n != k} P_n |c_nk|^2``.
    """
    M = _check_M(M)
    if M < 1:
        raise InvalidArgumentError("Monte-Carlo sampling needs M >= 1")
    trials = int(trials)
    if trials < 1:
        raise InvalidArgumentError("trials must be >= 1")
    lam = _lam_matrix(assoc, gains)
    K, J = gains.K, gains.J
    p = _powers_vector(powers, K)
    off = ~np.eye(K, dtype=bool)
    n_batches = -(-trials // batch)
    children = np.random.SeedSequence(seed).spawn(n_batches)
    acc = {k: _Compensated(s) for k, s in (("s1", K), ("s2", K), ("i1", K), ("i2", K), ("c", (K, J, K)))}
    for b, child in enumerate(children):
        T = min(batch, trials - b * batch)
        rng = np.random.default_rng(child)
        real = align_phases(_draw(gains, M, T, rng), lam, rng, uniform)
        c, cascade = effective_channels(real)
        pw = np.abs(c) ** 2  # (T, n, k)
        sig = p[None, :] * pw[:, np.arange(K), np.arange(K)]
        intf = np.einsum("n,tnk->tk", p, np.where(off[None], pw, 0.0))
        acc["s1"].add(sig.sum(axis=0))
        acc["s2"].add((sig**2).sum(axis=0))
        acc["i1"].add(intf.sum(axis=0))
        acc["i2"].add((intf**2).sum(axis=0))
        acc["c"].add((np.abs(cascade) ** 2).sum(axis=0))
    s, s_se = _mean_se(acc["s1"].value, acc["s2"].value, trials)
    i, i_se = _mean_se(acc["i1"].value, acc["i2"].value, trials)
    aligned = np.zeros((K, J, K), dtype=bool)
    for j, k in zip(*np.nonzero(lam)):
        aligned[k, j, k] = True
    return EmpiricalPowers(s, i, s_se, i_se, acc["c"].value / trials, ~aligned, trials)


def empirical_sinr_from_powers(ep: EmpiricalPowers, noise_power: float) -> SinrReport:
    return SinrReport.from_sinrs(ep.signal / (noise_power + ep.interference))


def empirical_sinr(assoc, powers, gains: LinkGains, M: int, noise_power: float, trials: int, seed: int, uniform: bool = False) -> SinrReport:
    """Ratio of sample means, matching the average-SINR definition."""
    ep = empirical_powers(assoc, powers, gains, M, trials, seed, uniform)
    return empirical_sinr_from_powers(ep, noise_power)


def hardening_fraction(gains: LinkGains, M: int, trials: int, seed: int, rel_tol: float = 0.05, n: int = 0, j: int = 0, k: int = 0) -> float:
    """Share of draws where ``sum_m |h||g|`` is within ``rel_tol`` of ``M (pi/4) beta eta``."""
    M = _check_M(M)
    rng = np.random.default_rng(seed)
    target = M * math.pi / 4.0 * math.sqrt(gains.beta_sq[n, j] * gains.eta_sq[j, k])
    hits = 0
    for start in range(0, trials, BATCH):
        T = min(BATCH, trials - start)
        h = _cscg(rng, gains.beta_sq[n, j], (T, M))
        g = _cscg(rng, gains.eta_sq[j, k], (T, M))
        s = np.sum(np.abs(h) * np.abs(g), axis=1)
        hits += int(np.count_nonzero(np.abs(s - target) <= rel_tol * target))
    return hits / trials


# --- validation report -----------------------------------------------------

@dataclass
class Check:
    name: str
    closed_form: float
    empirical: float
    std_err: float
    tolerance: float
    status: str = ""

    @property
    def rel_err(self) -> float:
        return abs(self.empirical - self.closed_form) / abs(self.closed_form) if self.closed_form else abs(self.empirical)

    def __post_init__(self):
        if not self.status:
            self.status = self.classify()

    def classify(self) -> str:
        # if three standard errors already exceed the tolerance the sample cannot decide
        rel_se = self.std_err / abs(self.closed_form) if self.closed_form else self.std_err
        if not np.isfinite(rel_se) or 3.0 * rel_se > self.tolerance:
            return "inconclusive"
        return "pass" if self.rel_err <= self.tolerance else "fail"

    @property
    def passed(self) -> bool:
        return self.status == "pass"

    def to_json(self) -> dict:
        return {
            "name": self.name,
            "closed_form": self.closed_form,
            "empirical": self.empirical,
            "rel_err": self.rel_err,
            "std_err": self.std_err,
            "tolerance": self.tolerance,
            "status": self.status,
            "pass": self.passed,
        }


INTERFERENCE_TOL = 0.02
SIGNAL_TOL = 0.03
SCATTER_TOL = 0.03


def validation_checks(assoc, powers, gains: LinkGains, M: int, noise_power: float, trials: int, seed: int, uniform: bool = False) -> list[Check]:
    """Compare every closed-form average power against its Monte-Carlo estimate."""
    lam = _lam_matrix(assoc, gains)
    p = _powers_vector(powers, gains.K)
    ep = empirical_powers(lam, p, gains, M, trials, seed, uniform)
    sig_cf = p * effective_signal_powers(lam, gains, M)
    int_cf = p @ interference_matrix(gains, M)
    checks = []
    for k in range(gains.K):
        checks.append(Check(f"interference[{k}]", float(int_cf[k]), float(ep.interference[k]), float(ep.interference_se[k]), INTERFERENCE_TOL))
    for k in range(gains.K):
        checks.append(Check(f"signal[{k}]", float(sig_cf[k]), float(ep.signal[k]), float(ep.signal_se[k]), SIGNAL_TOL))
    target = M * gains.q**2
    n_idx, j_idx, k_idx = np.nonzero(ep.scatter_mask)
    if n_idx.size:
        # an exponential variable has standard deviation equal to its mean
        worst = int(np.argmax(np.abs(ep.scatter_power[ep.scatter_mask] / target[ep.scatter_mask] - 1.0)))
        n, j, k = int(n_idx[worst]), int(j_idx[worst]), int(k_idx[worst])
        cf = float(target[n, j, k])
        checks.append(Check(f"scatter[{n},{j},{k}]", cf, float(ep.scatter_power[n, j, k]), cf / math.sqrt(ep.trials), SCATTER_TOL))
    return checks


def validation_report(assoc, powers, gains: LinkGains, M: int, noise_power: float, trials: int, seed: int, uniform: bool = False) -> dict:
    checks = validation_checks(assoc, powers, gains, M, noise_power, trials, seed, uniform)
    statuses = {c.status for c in checks}
    overall = "fail" if "fail" in statuses else ("inconclusive" if "inconclusive" in statuses else "pass")
    return {"schema": 1, "M": M, "trials": trials, "seed": seed, "status": overall, "checks": [c.to_json() for c in checks]}
