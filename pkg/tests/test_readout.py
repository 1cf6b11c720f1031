"""Photon statistics, normalization, estimator, and sensitivity checks."""

import numpy as np
import pytest

from nvsim.optics import BeamSpec
from nvsim.pulseseq import SimConfig, build_beff, build_double_psd, build_hahn, simulate
from nvsim.readout import (BeffEstimate, ReadoutConfig, beff_stderr,
                           estimate_beff, normalize_signal, photon_counts,
                           sensitivity)
from nvsim.rng import stream
from nvsim.spindyn import Constants

CFG = ReadoutConfig()


# --- photon counts -----------------------------------------------------------

def test_bright_state_mean():
    counts = np.array([photon_counts(0.0, CFG, stream(50, i)) for i in range(4000)])
    sem = np.sqrt(CFG.n0 / len(counts))
    assert abs(counts.mean() - CFG.n0) < 3 * sem


def test_dark_state_mean():
    counts = np.array([photon_counts(1.0, CFG, stream(51, i)) for i in range(4000)])
    expect = CFG.n0 * (1 - CFG.contrast)
    sem = np.sqrt(expect / len(counts))
    assert abs(counts.mean() - expect) < 3 * sem


def test_many_draw_mean_within_poisson_error():
    rng = stream(52, "bulk")
    counts = photon_counts(np.full(100_000, 0.5), CFG, rng)
    expect = CFG.n0 * (1 - 0.5 * CFG.contrast)
    assert abs(counts.mean() - expect) < 3 * np.sqrt(expect / 100_000)


def test_shots_scaling():
    c = photon_counts(0.0, CFG, stream(53, "s"), shots=1000)
    assert abs(c - 1000 * CFG.n0) < 5 * np.sqrt(1000 * CFG.n0)


def test_photon_counts_reproducible():
    a = photon_counts(0.3, CFG, seed=99)
    b = photon_counts(0.3, CFG, seed=99)
    assert a == b


def test_photon_counts_rejects_bad_population():
    with pytest.raises(ValueError):
        photon_counts(1.5, CFG, seed=1)


# --- normalization -----------------------------------------------------------

def test_normalize_reference_points():
    assert normalize_signal(1000.0, 1000.0, 950.0).p1 == 0.0
    assert normalize_signal(950.0, 1000.0, 950.0).p1 == 1.0
    assert normalize_signal(975.0, 1000.0, 950.0).p1 == 0.5


def test_normalize_clamps_and_flags():
    out = normalize_signal(1100.0, 1000.0, 950.0)
    assert out.p1 == -0.5 and out.clamped
    ok = normalize_signal(990.0, 1000.0, 950.0)
    assert not ok.clamped


def test_normalize_rejects_degenerate_references():
    with pytest.raises(ValueError):
        normalize_signal(975.0, 950.0, 950.0)


# --- estimator ---------------------------------------------------------------

def test_equal_signals_give_zero_field():
    est = estimate_beff(0.4, 0.4, 19e-6, 0.45)
    assert est.b_eff == 0.0 and not est.saturated


def test_swapping_halves_flips_sign():
    a = estimate_beff(0.3, 0.6, 19e-6, 0.45)
    b = estimate_beff(0.6, 0.3, 19e-6, 0.45)
    assert a.b_eff == pytest.approx(-b.b_eff, rel=1e-15)


def test_saturation_flag():
    est = estimate_beff(0.0, 1.0, 19e-6, 0.2)
    assert est.saturated and abs(est.phase) == pytest.approx(np.pi / 2)


def test_noise_free_closed_loop_recovers_60nt():
    # analytic pipeline round trip: visibility-calibrated amplitude makes the
    # estimate exact to well under 0.1%
    beam = BeamSpec(0.020, 45.0, 785e-9, 1e-6)
    ana = SimConfig(mode="analytic")
    v_echo = 1 - 2 * simulate(build_hahn(21e-6), ana).p1
    v_dpsd = 1 - 2 * simulate(build_double_psd(21e-6, 19e-6, beam), ana).p1
    amp = np.sqrt(v_echo * v_dpsd) / 2
    p_f = simulate(build_beff(21e-6, 19e-6, beam, "first"), ana).p1
    p_s = simulate(build_beff(21e-6, 19e-6, beam, "second"), ana).p1
    est = estimate_beff(p_f, p_s, 19e-6, amp)
    assert est.b_eff == pytest.approx(60e-9, rel=1e-3 * 0.1)


def test_estimator_odd_in_signal_difference():
    rng = np.random.default_rng(17)
    for _ in range(50):
        s1, s2 = rng.uniform(0.2, 0.8, size=2)
        a = estimate_beff(s1, s2, 19e-6, 0.45)
        b = estimate_beff(s2, s1, 19e-6, 0.45)
        assert a.b_eff == pytest.approx(-b.b_eff, rel=1e-12, abs=1e-24)


def test_estimate_rejects_bad_args():
    with pytest.raises(ValueError):
        estimate_beff(0.4, 0.5, 0.0, 0.45)
    with pytest.raises(ValueError):
        estimate_beff(0.4, 0.5, 19e-6, 0.0)


def test_beff_stderr_scales_inverse_time():
    a = beff_stderr(0.01, 0.01, 19e-6, 0.45)
    b = beff_stderr(0.01, 0.01, 38e-6, 0.45)
    assert a == pytest.approx(2 * b, rel=1e-12)


# --- sensitivity -------------------------------------------------------------

def test_sensitivity_quarter_t2_doubles():
    t2 = 150e-6
    assert sensitivity(4 * t2, CFG) == pytest.approx(0.5 * sensitivity(t2, CFG),
                                                     rel=1e-12)


def test_sensitivity_quarter_photons_doubles():
    lo = ReadoutConfig(n0=250.0, contrast=CFG.contrast)
    hi = ReadoutConfig(n0=1000.0, contrast=CFG.contrast)
    assert sensitivity(150e-6, lo) == pytest.approx(2 * sensitivity(150e-6, hi),
                                                    rel=1e-12)


def test_sensitivity_magnitude_is_sane():
    eta = sensitivity(150e-6, CFG)
    eta_nt = eta * 1e9
    assert np.isfinite(eta_nt) and eta_nt > 0
    # defaults land in the nT/sqrt(Hz) regime
    assert 1e-3 < eta_nt < 1e3


def test_sensitivity_rejects_bad_t2():
    with pytest.raises(ValueError):
        sensitivity(0.0, CFG)


def test_readout_config_invariants():
    with pytest.raises(ValueError):
        ReadoutConfig(n0=0.0)
    with pytest.raises(ValueError):
        ReadoutConfig(contrast=1.0)
    with pytest.raises(ValueError):
        ReadoutConfig(shots=0)


def test_closed_loop_with_photon_noise_is_unbiased():
    # repeated noisy estimates at 60 nT: mean within 2 standard errors
    beam = BeamSpec(0.020, 45.0, 785e-9, 1e-6)
    ana = SimConfig(mode="analytic")
    v_echo = 1 - 2 * simulate(build_hahn(21e-6), ana).p1
    v_dpsd = 1 - 2 * simulate(build_double_psd(21e-6, 19e-6, beam), ana).p1
    amp = np.sqrt(v_echo * v_dpsd) / 2
    p_f = simulate(build_beff(21e-6, 19e-6, beam, "first"), ana).p1
    p_s = simulate(build_beff(21e-6, 19e-6, beam, "second"), ana).p1

    shots = 4000
    rng = stream(77, "loop")
    ests = []
    for _ in range(150):
        ref0 = photon_counts(0.0, CFG, rng, shots=shots) / shots
        ref1 = photon_counts(1.0, CFG, rng, shots=shots) / shots
        s_f = normalize_signal(photon_counts(p_f, CFG, rng, shots=shots) / shots,
                               ref0, ref1).p1
        s_s = normalize_signal(photon_counts(p_s, CFG, rng, shots=shots) / shots,
                               ref0, ref1).p1
        ests.append(estimate_beff(s_f, s_s, 19e-6, amp).b_eff)
    ests = np.array(ests)
    sem = ests.std(ddof=1) / np.sqrt(len(ests))
    assert abs(ests.mean() - 60e-9) < 2 * sem