"""Polarization transport, PSD, and the field/absorption model checks.

Expected values are frozen from independent evaluations: Stokes identities
from the analytic QWP algebra, detunings from c*(1/637nm - 1/lambda), and
intensity/field numbers from direct arithmetic.
"""

import numpy as np
import pytest

from nvsim.optics import (NV_AXES, X_POL, BeamSpec, EffectiveFieldModel,
                          FieldVector, JonesVector, absorption_rate, detuning,
                          effective_field, jones_after_qwp, mean_intensity,
                          nv_axis_projection, peak_intensity,
                          photonic_spin_density, stokes_s3)

ANCHOR_BEAM = BeamSpec(power=0.020, qwp_deg=45.0, wavelength=785e-9, waist=1e-6)
MODEL = EffectiveFieldModel.calibrated(ANCHOR_BEAM, 60e-9)


# --- quarter-wave plate -----------------------------------------------------

def test_qwp_fast_axis_aligned_is_identity():
    out = jones_after_qwp(X_POL, 0.0)
    assert stokes_s3(out) == pytest.approx(0.0, abs=1e-15)
    # equal up to global phase: cross term vanishes
    assert abs(out.ex * np.conj(out.ey) - 0.0) < 1e-15
    assert abs(abs(out.ex) - 1.0) < 1e-12


def test_qwp_at_45_gives_unit_circular_with_positive_sign():
    out = jones_after_qwp(X_POL, 45.0)
    assert stokes_s3(out) == pytest.approx(1.0, abs=1e-12)
    assert stokes_s3(jones_after_qwp(X_POL, -45.0)) == pytest.approx(-1.0, abs=1e-12)


def test_qwp_at_22p5_gives_sin45():
    assert stokes_s3(jones_after_qwp(X_POL, 22.5)) == pytest.approx(
        0.7071067811865476, abs=1e-12)


def test_qwp_angle_taken_modulo_360():
    a = jones_after_qwp(X_POL, 30.0)
    b = jones_after_qwp(X_POL, 390.0)
    assert a.ex == pytest.approx(b.ex, abs=1e-12)
    assert a.ey == pytest.approx(b.ey, abs=1e-12)


def test_qwp_unitary_on_random_states():
    rng = np.random.default_rng(42)
    for _ in range(200):
        raw = rng.normal(size=4)
        e = JonesVector(raw[0] + 1j * raw[1], raw[2] + 1j * raw[3]).normalized()
        out = jones_after_qwp(e, rng.uniform(-360, 720))
        assert abs(out.norm() - 1.0) < 1e-12


def test_qwp_s3_equals_sin_two_theta_everywhere():
    thetas = np.linspace(-90.0, 180.0, 541)
    for th in thetas:
        s3 = stokes_s3(jones_after_qwp(X_POL, th))
        assert abs(s3 - np.sin(2 * np.radians(th))) < 1e-12


# --- Stokes S3 ---------------------------------------------------------------

def test_s3_linear_is_zero():
    assert stokes_s3(JonesVector(1.0, 0.0)) == 0.0


def test_s3_right_circular_is_plus_one():
    e = JonesVector(1 / np.sqrt(2), 1j / np.sqrt(2))
    assert stokes_s3(e) == pytest.approx(1.0, abs=1e-15)


def test_s3_conjugation_flips_sign():
    rng = np.random.default_rng(3)
    for _ in range(50):
        raw = rng.normal(size=4)
        e = JonesVector(raw[0] + 1j * raw[1], raw[2] + 1j * raw[3])
        conj = JonesVector(np.conj(e.ex), np.conj(e.ey))
        assert stokes_s3(conj) == pytest.approx(-stokes_s3(e), abs=1e-12)


def test_s3_zero_norm_rejected():
    with pytest.raises(ValueError):
        JonesVector(0.0, 0.0)


# --- photonic spin density ---------------------------------------------------

def test_psd_circular_beam_points_along_z():
    e0 = 3.7
    f = FieldVector(e0 / np.sqrt(2), 1j * e0 / np.sqrt(2), 0.0,
                    permittivity=8.854e-12, omega0=2.4e15)
    s = photonic_spin_density(f)
    expected_z = 8.854e-12 * e0 ** 2 / (4 * 2.4e15)
    assert s[0] == 0.0 and s[1] == 0.0
    assert s[2] == pytest.approx(expected_z, rel=1e-12)


def test_psd_real_field_is_zero():
    f = FieldVector(1.0, -2.5, 0.7, permittivity=8.854e-12, omega0=2.4e15)
    assert np.all(photonic_spin_density(f) == 0.0)


def test_psd_antisymmetric_under_conjugation():
    rng = np.random.default_rng(7)
    for _ in range(50):
        raw = rng.normal(size=6)
        f = FieldVector(raw[0] + 1j * raw[1], raw[2] + 1j * raw[3],
                        raw[4] + 1j * raw[5], permittivity=1.0, omega0=1.0)
        g = FieldVector(np.conj(f.ex), np.conj(f.ey), np.conj(f.ez), 1.0, 1.0)
        assert np.allclose(photonic_spin_density(g), -photonic_spin_density(f),
                           atol=1e-15)


# --- beam intensity ----------------------------------------------------------

def test_peak_intensity_values():
    assert peak_intensity(0.0, 1e-6) == 0.0
    assert peak_intensity(0.020, 1e-6) == pytest.approx(1.27323954e10, rel=1e-8)
    assert peak_intensity(0.040, 1e-6) == pytest.approx(
        2 * peak_intensity(0.020, 1e-6), rel=1e-15)


def test_mean_intensity_is_half_peak():
    assert mean_intensity(0.02, 1e-6) == pytest.approx(
        0.5 * peak_intensity(0.02, 1e-6), rel=1e-15)


def test_peak_intensity_rejects_bad_waist():
    with pytest.raises(ValueError):
        peak_intensity(0.01, 0.0)


# --- detuning ----------------------------------------------------------------

def test_detuning_values():
    assert detuning(705e-9) / (2 * np.pi) == pytest.approx(4.539427e13, rel=1e-6)
    assert detuning(818e-9) / (2 * np.pi) == pytest.approx(1.041374e14, rel=1e-6)


def test_detuning_rejects_blue_side_and_boundary():
    with pytest.raises(ValueError):
        detuning(637e-9)
    with pytest.raises(ValueError):
        detuning(620e-9)


# --- effective field ---------------------------------------------------------

def test_effective_field_hits_calibration_anchor():
    assert effective_field(ANCHOR_BEAM, MODEL) == pytest.approx(60e-9, rel=1e-12)


def test_effective_field_vanishes_for_linear_polarization():
    for theta in (0.0, 90.0):
        beam = BeamSpec(0.020, theta, 785e-9, 1e-6)
        assert abs(effective_field(beam, MODEL)) < 1e-22


def test_effective_field_wavelength_scaling_705_to_818():
    b705 = effective_field(BeamSpec(0.015, 45.0, 705e-9, 1e-6), MODEL)
    b818 = effective_field(BeamSpec(0.015, 45.0, 818e-9, 1e-6), MODEL)
    assert b818 / b705 == pytest.approx(0.375691, rel=1e-5)


def test_effective_field_linear_in_power():
    rng = np.random.default_rng(11)
    for _ in range(25):
        p1, p2 = rng.uniform(1e-3, 0.02, size=2)
        th = rng.uniform(-90, 90)
        b1 = effective_field(BeamSpec(p1, th, 785e-9, 1e-6), MODEL)
        b2 = effective_field(BeamSpec(p2, th, 785e-9, 1e-6), MODEL)
        if b1 != 0.0:
            assert b2 / b1 == pytest.approx(p2 / p1, rel=1e-12)


def test_effective_field_odd_in_qwp_angle():
    for th in (10.0, 30.0, 45.0, 77.0):
        plus = effective_field(BeamSpec(0.02, th, 785e-9, 1e-6), MODEL)
        minus = effective_field(BeamSpec(0.02, -th, 785e-9, 1e-6), MODEL)
        assert plus == pytest.approx(-minus, rel=1e-12)


def test_effective_field_ratio_law_over_paper_wavelengths():
    lams = (705e-9, 730e-9, 785e-9, 818e-9)
    fields = {lam: effective_field(BeamSpec(0.02, 45.0, lam, 1e-6), MODEL)
              for lam in lams}
    for l1 in lams:
        for l2 in lams:
            expect = (l2 * detuning(l2)) / (l1 * detuning(l1))
            assert fields[l1] / fields[l2] == pytest.approx(expect, rel=1e-12)


# --- absorption --------------------------------------------------------------

def test_absorption_zero_power():
    beam = BeamSpec(0.0, 45.0, 818e-9, 1e-6)
    assert absorption_rate(beam, MODEL) == 0.0


def test_absorption_stays_below_decoherence_budget_at_818():
    # no observable decoherence at 20 mW / 818 nm: < 1% visibility loss
    # over two 42 us exposures
    beam = BeamSpec(0.020, 45.0, 818e-9, 1e-6)
    rate = absorption_rate(beam, MODEL, temperature=295.0)
    assert rate * (2 * 42e-6) < 0.01


def test_absorption_detuning_ratio():
    b705 = BeamSpec(0.020, 45.0, 705e-9, 1e-6)
    b818 = BeamSpec(0.020, 45.0, 818e-9, 1e-6)
    ratio = absorption_rate(b705, MODEL) / absorption_rate(b818, MODEL)
    assert ratio == pytest.approx(5.262728, rel=1e-5)


def test_absorption_monotone_in_power_and_detuning():
    rates_p = [absorption_rate(BeamSpec(p, 45.0, 705e-9, 1e-6), MODEL)
               for p in (0.005, 0.010, 0.015, 0.020)]
    assert np.all(np.diff(rates_p) > 0)
    rates_lam = [absorption_rate(BeamSpec(0.02, 45.0, lam, 1e-6), MODEL)
                 for lam in (705e-9, 730e-9, 785e-9, 818e-9)]
    assert np.all(np.diff(rates_lam) < 0)


def test_temperature_factor_table():
    assert MODEL.g(295.0) == 1.0
    assert MODEL.g(265.0) == 0.5
    assert MODEL.g(280.0) == pytest.approx(0.75, rel=1e-12)
    # clamped outside the table, monotone within
    assert MODEL.g(250.0) == 0.5
    assert MODEL.g(320.0) == 1.0
    temps = np.linspace(265, 295, 31)
    gs = [MODEL.g(t) for t in temps]
    assert np.all(np.diff(gs) >= 0)


def test_cold_absorption_is_reduced():
    beam = BeamSpec(0.020, 45.0, 705e-9, 1e-6)
    assert absorption_rate(beam, MODEL, 265.0) == pytest.approx(
        0.5 * absorption_rate(beam, MODEL, 295.0), rel=1e-12)


# --- crystal geometry --------------------------------------------------------

def test_axis_projection_of_z_on_111():
    assert nv_axis_projection(NV_AXES[0], [0.0, 0.0, 1.0]) == pytest.approx(
        1 / np.sqrt(3), rel=1e-12)


def test_axis_projection_equal_magnitude_on_all_four():
    projs = [nv_axis_projection(ax, [0.0, 0.0, 1.0]) for ax in NV_AXES]
    mags = np.abs(projs)
    assert np.all(np.abs(mags - mags[0]) < 1e-12)


def test_axis_projection_of_axis_is_one():
    for ax in NV_AXES:
        assert nv_axis_projection(ax, ax) == pytest.approx(1.0, abs=1e-12)


def test_axis_projection_requires_unit_vector():
    with pytest.raises(ValueError):
        nv_axis_projection(NV_AXES[0], [0.0, 0.0, 2.0])


# --- constructors ------------------------------------------------------------

def test_beam_spec_invariants():
    with pytest.raises(ValueError):
        BeamSpec(-1e-3, 45.0, 785e-9, 1e-6)
    with pytest.raises(ValueError):
        BeamSpec(0.01, 45.0, 785e-9, 0.0)
    with pytest.raises(ValueError):
        BeamSpec(0.01, 45.0, 500e-9, 1e-6)


def test_model_invariants():
    with pytest.raises(ValueError):
        EffectiveFieldModel(c_cal=0.0)
    with pytest.raises(ValueError):
        EffectiveFieldModel(c_cal=1.0, kappa=-1.0)
    with pytest.raises(ValueError):
        EffectiveFieldModel.calibrated(ANCHOR_BEAM, 0.0)
