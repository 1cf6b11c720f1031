"""Noise-model checks: Gaussian broadening, OU process, envelope, revivals.

Monte Carlo oracles run with fixed seeds; expected values come from the
Gaussian characteristic function and OU stationary statistics.
"""

import numpy as np
import pytest

from nvsim.bath import (BathConfig, OUConfig, bath_realization,
                        echo_bath_modulation, echo_envelope, ou_sample_path,
                        sample_inhomogeneous_detuning)


# --- inhomogeneous broadening ------------------------------------------------

def test_fid_average_matches_gaussian_characteristic_function():
    t2s = 2e-6
    delta = sample_inhomogeneous_detuning(t2s, seed=101, size=100_000)
    # <cos(delta * T2*)> = exp(-1)
    assert np.mean(np.cos(delta * t2s)) == pytest.approx(np.exp(-1), abs=0.01)


def test_detuning_variance():
    t2s = 2e-6
    delta = sample_inhomogeneous_detuning(t2s, seed=102, size=100_000)
    assert np.var(delta) == pytest.approx(2 / t2s ** 2, rel=0.03)


def test_infinite_t2_star_gives_zero_detuning():
    delta = sample_inhomogeneous_detuning(np.inf, seed=103, size=1000)
    assert np.all(delta == 0.0)


def test_fid_decay_curve_from_samples():
    t2s = 2e-6
    delta = sample_inhomogeneous_detuning(t2s, seed=104, size=100_000)
    for t in (0.5e-6, 1e-6, 2e-6, 3e-6):
        mc = np.mean(np.cos(delta * t))
        expect = np.exp(-(t / t2s) ** 2)
        stat = np.std(np.cos(delta * t)) / np.sqrt(len(delta))
        assert abs(mc - expect) < 3 * stat + 1e-4


def test_detuning_rejects_bad_t2():
    with pytest.raises(ValueError):
        sample_inhomogeneous_detuning(0.0, seed=1)


# --- Ornstein-Uhlenbeck ------------------------------------------------------

def test_ou_zero_sigma_is_flat():
    cfg = OUConfig(sigma=0.0, tau_c=1e-3, seed=7)
    assert np.all(ou_sample_path(cfg, 1e-5, 1000) == 0.0)


def test_ou_stationary_variance():
    cfg = OUConfig(sigma=2 * np.pi * 1e3, tau_c=1e-3, seed=8)
    path = ou_sample_path(cfg, 1e-4, 1_000_000)
    assert np.var(path) == pytest.approx(cfg.sigma ** 2, rel=0.05)


def test_ou_autocorrelation_at_tau_c():
    cfg = OUConfig(sigma=1.0, tau_c=1e-3, seed=9)
    dt = 1e-4
    lag = round(cfg.tau_c / dt)
    path = ou_sample_path(cfg, dt, 1_000_000)
    corr = np.mean(path[:-lag] * path[lag:]) / np.var(path)
    assert corr == pytest.approx(np.exp(-1), abs=0.05)


def test_ou_reproducible_bit_exact():
    cfg = OUConfig(sigma=3.0, tau_c=5e-4, seed=10)
    a = ou_sample_path(cfg, 1e-5, 5000)
    b = ou_sample_path(cfg, 1e-5, 5000)
    assert np.array_equal(a, b)


def test_ou_rejects_bad_args():
    cfg = OUConfig()
    with pytest.raises(ValueError):
        ou_sample_path(cfg, 0.0, 10)
    with pytest.raises(ValueError):
        ou_sample_path(cfg, 1e-5, 0)
    with pytest.raises(ValueError):
        OUConfig(sigma=-1.0)


# --- echo envelope -----------------------------------------------------------

def test_envelope_values():
    assert echo_envelope(0.0, 100e-6, 2.0) == 1.0
    assert echo_envelope(50e-6, 100e-6, 2.0) == pytest.approx(np.exp(-1), rel=1e-12)
    assert echo_envelope(25e-6, 100e-6, 2.0) == pytest.approx(np.exp(-0.25), rel=1e-12)


def test_envelope_monotone_decreasing():
    taus = np.linspace(0, 200e-6, 400)
    env = echo_envelope(taus, 150e-6, 2.0)
    assert np.all(np.diff(env) < 0)


# --- carbon-13 revivals ------------------------------------------------------

def test_modulation_is_one_at_zero():
    assert echo_bath_modulation(0.0, BathConfig()) == pytest.approx(1.0, abs=0.0)


def test_modulation_exactly_one_at_revivals_for_any_draw():
    for seed in range(20):
        cfg = BathConfig(seed=seed)
        for k in (1, 2, 3):
            tau = cfg.revival_time(k)
            assert echo_bath_modulation(tau, cfg) == pytest.approx(1.0, abs=1e-12)


def test_default_revivals_near_21_and_42_us():
    cfg = BathConfig()  # b_bias = 4.45 mT
    assert cfg.revival_time(1) == pytest.approx(21e-6, abs=0.5e-6)
    assert cfg.revival_time(2) == pytest.approx(42e-6, abs=0.5e-6)


def test_doubling_bias_halves_revival_spacing():
    a = BathConfig(b_bias=4.45e-3)
    b = BathConfig(b_bias=8.9e-3)
    assert b.revival_time(1) == pytest.approx(a.revival_time(1) / 2, rel=1e-12)


def test_modulation_bounded_and_collapses_between_revivals():
    rng = np.random.default_rng(0)
    for seed in range(10):
        cfg = BathConfig(seed=seed)
        taus = rng.uniform(0, 100e-6, size=200)
        mod = echo_bath_modulation(taus, cfg)
        assert np.all(mod >= 0.0) and np.all(mod <= 1.0)
    # midpoint between revivals is suppressed for the default draw
    cfg = BathConfig()
    assert echo_bath_modulation(1.5 * cfg.revival_time(1), cfg) < 0.6


def test_bath_realization_deterministic_and_in_range():
    cfg = BathConfig()
    w1, k1 = bath_realization(cfg)
    w2, k2 = bath_realization(cfg)
    assert np.array_equal(w1, w2) and np.array_equal(k1, k2)
    assert len(w1) == cfg.n_bath
    assert np.all(k1 > 0) and np.all(k1 <= cfg.k_max)
    assert np.all(w1 > cfg.larmor())
    assert np.all(w1 - cfg.larmor() <= cfg.hyperfine_max)


def test_bath_config_invariants():
    with pytest.raises(ValueError):
        BathConfig(t2_star=10e-6, t2=5e-6)
    with pytest.raises(ValueError):
        BathConfig(stretch_p=0.5)
    with pytest.raises(ValueError):
        BathConfig(n_bath=-1)
