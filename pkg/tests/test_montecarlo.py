import math

import numpy as np
import pytest

from conftest import two_user_gains, random_synthetic
from irsnet.analytics import Association, average_sinr, effective_signal_powers, interference_matrix
from irsnet.errors import InvalidArgumentError
from irsnet.geometry import synthetic_gains
from irsnet.montecarlo import (
    Check,
    align_phases,
    effective_channels,
    empirical_powers,
    empirical_sinr,
    empirical_sinr_from_powers,
    hardening_fraction,
    sample_realization,
    validation_report,
)


@pytest.fixture(scope="module")
def g35():
    return random_synthetic(np.random.default_rng(7), 3, 5, spread=1.0)


def test_direct_channel_moments(g35):
    real = sample_realization(g35, 1, seed=1, trials=100_000)
    p2 = np.mean(np.abs(real.f) ** 2, axis=0)
    m1 = np.mean(np.abs(real.f), axis=0)
    assert np.allclose(p2 / g35.alpha_sq, 1.0, atol=0.02)
    assert np.allclose(m1 / (math.sqrt(math.pi) / 2 * np.sqrt(g35.alpha_sq)), 1.0, atol=0.02)


def test_reflected_channel_variances(g35):
    real = sample_realization(g35, 8, seed=2, trials=5_000)
    assert np.allclose(np.mean(np.abs(real.h) ** 2, axis=(0, 3)) / g35.beta_sq, 1.0, atol=0.03)
    assert np.allclose(np.mean(np.abs(real.g) ** 2, axis=(0, 3)) / g35.eta_sq, 1.0, atol=0.03)


def test_sampling_deterministic(g35):
    a = sample_realization(g35, 4, seed=9, trials=3)
    b = sample_realization(g35, 4, seed=9, trials=3)
    assert np.array_equal(a.f, b.f) and np.array_equal(a.h, b.h) and np.array_equal(a.g, b.g)
    c = sample_realization(g35, 4, seed=10, trials=3)
    assert not np.array_equal(a.f, c.f)


def test_sampling_rejects(g35):
    with pytest.raises(InvalidArgumentError):
        sample_realization(g35, 0, seed=0)
    with pytest.raises(InvalidArgumentError):
        sample_realization(g35, 3, seed=0, trials=0)
    with pytest.raises(InvalidArgumentError):
        empirical_powers(Association.empty(5, 3), np.ones(3), g35, 0, 10, 0)


def test_alignment_is_coherent(g35):
    lam = Association.from_assignment([0, 2, -1, 1, 0], 3)
    real = align_phases(sample_realization(g35, 16, seed=3, trials=20), lam, rng=4)
    assert real.theta.shape == (20, 5, 16)
    assert np.all((real.theta >= 0) & (real.theta < 2 * np.pi))
    _, cascade = effective_channels(real)
    for j, k in zip(*np.nonzero(lam.lam)):
        terms = real.g[:, j, k, :] * real.phasor[:, j, k, :] * real.h[:, k, j, :]
        assert np.allclose(np.abs(cascade[:, k, j, k]), np.sum(np.abs(real.h[:, k, j]) * np.abs(real.g[:, j, k]), axis=1), rtol=1e-12)
        same = np.angle(terms * np.conj(real.f[:, k, k])[:, None])
        assert np.max(np.abs(same)) < 1e-9


def test_unconfigured_phases_rejected(g35):
    with pytest.raises(InvalidArgumentError):
        effective_channels(sample_realization(g35, 2, seed=0))
    with pytest.raises(InvalidArgumentError):
        align_phases(sample_realization(g35, 2, seed=0), np.zeros((2, 2)))


@pytest.mark.parametrize("uniform", [False, True])
def test_scattered_power(g35, uniform):
    lam = Association.from_assignment([0, 1, 2, -1, 0], 3)
    ep = empirical_powers(lam, np.ones(3), g35, 32, 10_000, seed=5, uniform=uniform)
    target = 32 * g35.q**2
    ratio = ep.scatter_power[ep.scatter_mask] / target[ep.scatter_mask]
    assert np.all(np.abs(ratio - 1) < 0.05)
    assert np.median(np.abs(ratio - 1)) < 0.03


def test_hardening(g35):
    assert hardening_fraction(g35, 4096, 1000, seed=6) >= 0.95
    # far less concentration with few elements
    assert hardening_fraction(g35, 4, 1000, seed=6) < 0.5


def test_interference_and_signal_within_stat_error(g35):
    lam = Association.from_assignment([0, 1, 2, 0, -1], 3)
    p = np.array([1.0, 0.5, 2.0])
    M = 32
    ep = empirical_powers(lam, p, g35, M, 20_000, seed=11)
    int_cf = p @ interference_matrix(g35, M)
    sig_cf = p * effective_signal_powers(lam, g35, M)
    assert np.all(np.abs(ep.interference - int_cf) <= 4 * ep.interference_se)
    # the signal closed form carries an O(1/M) hardening bias
    assert np.all(np.abs(ep.signal / sig_cf - 1) < 0.05)


def test_zero_power(g35):
    ep = empirical_powers(Association.empty(5, 3), np.zeros(3), g35, 4, 100, seed=0)
    assert np.all(ep.signal == 0) and np.all(ep.interference == 0)


def test_ratio_of_means_by_construction(g35):
    lam = Association.from_assignment([0, 1, 2, 0, -1], 3)
    ep = empirical_powers(lam, np.ones(3), g35, 8, 1000, seed=3)
    rep = empirical_sinr(lam, np.ones(3), g35, 8, 0.1, 1000, seed=3)
    assert np.array_equal(rep.per_user, ep.signal / (0.1 + ep.interference))
    assert np.array_equal(empirical_sinr_from_powers(ep, 0.1).per_user, rep.per_user)


def test_estimates_bit_identical(g35):
    lam = Association.from_assignment([0, 1, 2, 0, -1], 3)
    a = empirical_powers(lam, np.ones(3), g35, 8, 1200, seed=3)
    b = empirical_powers(lam, np.ones(3), g35, 8, 1200, seed=3)
    assert np.array_equal(a.signal, b.signal) and np.array_equal(a.interference, b.interference)
    assert np.array_equal(a.scatter_power, b.scatter_power)


def test_coherence_beats_random_phases(g35):
    lam = Association.from_assignment([0, -1, -1, -1, -1], 3)
    real = sample_realization(g35, 16, seed=8, trials=1000)
    c_al, _ = effective_channels(align_phases(real, lam, rng=1))
    c_rand, _ = effective_channels(align_phases(real, Association.empty(5, 3), rng=1))
    assert np.mean(np.abs(c_al[:, 0, 0])) >= np.mean(np.abs(c_rand[:, 0, 0]))


def test_example1_scattering_limit():
    rep = empirical_sinr(np.zeros((1, 2)), [10.0, 10.0], two_user_gains(8.0), 4096, 1.0, 4000, seed=1)
    assert rep.per_user[0] == pytest.approx(8 / 3, rel=0.05)


def test_single_user_m1():
    g = synthetic_gains([[1.0]], [[0.5]], [[0.5]])
    cf = average_sinr(np.zeros((1, 1)), [1.0], g, 1, 0.1).per_user[0]
    emp = empirical_sinr(np.zeros((1, 1)), [1.0], g, 1, 0.1, 40_000, seed=2).per_user[0]
    assert emp == pytest.approx(cf, rel=0.05)


def test_check_classification():
    assert Check("x", 1.0, 1.01, 0.001, 0.02).status == "pass"
    assert Check("x", 1.0, 1.05, 0.001, 0.02).status == "fail"
    assert Check("x", 1.0, 1.0, 0.05, 0.02).status == "inconclusive"
    assert Check("x", 1.0, 1.0, float("inf"), 0.02).status == "inconclusive"


def test_validation_report_shape(g35):
    lam = Association.from_assignment([0, 1, 2, 0, -1], 3)
    rep = validation_report(lam, np.ones(3), g35, 16, 0.1, 2000, seed=0)
    assert rep["schema"] == 1 and rep["status"] in ("pass", "fail", "inconclusive")
    names = [c["name"] for c in rep["checks"]]
    assert sum(n.startswith("interference") for n in names) == 3
    assert sum(n.startswith("signal") for n in names) == 3
    assert any(n.startswith("scatter") for n in names)
    for c in rep["checks"]:
        assert set(c) >= {"closed_form", "empirical", "rel_err", "tolerance", "pass"}
