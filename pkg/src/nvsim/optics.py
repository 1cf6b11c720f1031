"""Polarization optics and the calibrated effective-field model.

Jones-calculus transport through a quarter-wave plate, the photonic spin
density of a complex optical field, S = (eps/4*omega0) * Im(E* x E), and
the phenomenological models mapping a beam (power, QWP angle, wavelength)
to the axial effective magnetic field and the off-resonant absorption rate
it induces on the spin qubits.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

C_LIGHT = 299792458.0  # m/s

# Unit vectors of the four NV orientations in a (100)-grown crystal.
NV_AXES = tuple(np.array(a) / np.sqrt(3.0) for a in
                ((1.0, 1, 1), (1.0, -1, -1), (-1.0, 1, -1), (-1.0, -1, 1)))


@dataclass(frozen=True)
class JonesVector:
    """Transverse polarization amplitudes; global phase carries no meaning."""

    ex: complex
    ey: complex

    def __post_init__(self):
        n = self.norm()
        if not np.isfinite(n) or n == 0.0:
            raise ValueError("Jones vector must have finite nonzero norm")

    def norm(self) -> float:
        return float(np.sqrt(abs(self.ex) ** 2 + abs(self.ey) ** 2))

    def normalized(self) -> "JonesVector":
        n = self.norm()
        return JonesVector(self.ex / n, self.ey / n)


X_POL = JonesVector(1.0, 0.0)


@dataclass(frozen=True)
class FieldVector:
    """Complex electric field (V/m) with medium and optical frequency."""

    ex: complex
    ey: complex
    ez: complex
    permittivity: float  # F/m
    omega0: float        # rad/s

    def __post_init__(self):
        if self.permittivity <= 0:
            raise ValueError("permittivity must be positive")
        if self.omega0 <= 0:
            raise ValueError("optical angular frequency must be positive")


@dataclass(frozen=True)
class BeamSpec:
    """Beam settings: power (W), QWP fast-axis angle (deg), wavelength (m), waist (m)."""

    power: float
    qwp_deg: float
    wavelength: float
    waist: float = 1e-6

    def __post_init__(self):
        if self.power < 0:
            raise ValueError("beam power must be nonnegative")
        if self.waist <= 0:
            raise ValueError("beam waist must be positive")
        if not 600e-9 <= self.wavelength <= 1000e-9:
            raise ValueError("wavelength outside the 600-1000 nm model range")


def _g_default():
    return ((265.0, 0.5), (295.0, 1.0))


@dataclass(frozen=True)
class EffectiveFieldModel:
    """Calibration constants for the field and absorption models.

    c_cal converts peak intensity over (wavelength * detuning) into tesla;
    kappa converts intensity over detuning^2 into an absorption rate, scaled
    by the dimensionless temperature factor g(T) (piecewise-linear table).
    """

    c_cal: float
    lambda_zpl: float = 637e-9
    kappa: float = 3.5e21
    g_table: tuple = field(default_factory=_g_default)

    def __post_init__(self):
        if self.c_cal <= 0:
            raise ValueError("c_cal must be positive")
        if self.kappa < 0:
            raise ValueError("kappa must be nonnegative")
        temps = [t for t, _ in self.g_table]
        if sorted(temps) != temps or len(temps) < 1:
            raise ValueError("g table must be sorted by temperature")

    def g(self, temperature: float) -> float:
        """Temperature factor; clamped linear interpolation of the table."""
        temps = np.array([t for t, _ in self.g_table])
        vals = np.array([g for _, g in self.g_table])
        return float(np.interp(temperature, temps, vals))

    @classmethod
    def calibrated(cls, beam: BeamSpec, b_target: float, **kwargs) -> "EffectiveFieldModel":
        """Model whose c_cal makes `beam` produce exactly b_target tesla."""
        if b_target == 0:
            raise ValueError("cannot calibrate against a zero target field")
        model = cls(c_cal=1.0, **kwargs)
        b_unit = effective_field(beam, model)
        if b_unit == 0:
            raise ValueError("degenerate calibration beam (no circular component)")
        return replace(model, c_cal=abs(b_target / b_unit))


def jones_after_qwp(e_in: JonesVector, theta_deg: float) -> JonesVector:
    """Propagate through a quarter-wave plate with fast axis at theta_deg.

    Convention: retarder diag(1, -i) in its own frame, which maps x-polarized
    input at theta = 45 deg to (1, i)/sqrt(2), i.e. S3 = +1.
    """
    th = np.radians(theta_deg)
    c, s = np.cos(th), np.sin(th)
    ex, ey = e_in.ex, e_in.ey
    # rotate into the plate frame, retard the slow axis, rotate back
    ap = c * ex + s * ey
    am = -s * ex + c * ey
    am = am * (-1j)
    return JonesVector(c * ap - s * am, s * ap + c * am)


def stokes_s3(e: JonesVector) -> float:
    """Degree of circular polarization, 2 Im(ex* ey) / (|ex|^2 + |ey|^2)."""
    n2 = abs(e.ex) ** 2 + abs(e.ey) ** 2
    if n2 == 0:
        raise ValueError("zero-norm polarization state")
    return float(2.0 * np.imag(np.conj(e.ex) * e.ey) / n2)


def photonic_spin_density(f: FieldVector) -> np.ndarray:
    """Electric spin density (eps/4*omega0) * Im(E* x E), J*s/m^3, lab frame."""
    e = np.array([f.ex, f.ey, f.ez])
    return f.permittivity / (4.0 * f.omega0) * np.imag(np.cross(np.conj(e), e))


def peak_intensity(power: float, waist: float) -> float:
    """On-axis intensity 2P/(pi w0^2) of a Gaussian beam, W/m^2."""
    if waist <= 0:
        raise ValueError("beam waist must be positive")
    if power < 0:
        raise ValueError("beam power must be nonnegative")
    return 2.0 * power / (np.pi * waist ** 2)


def mean_intensity(power: float, waist: float) -> float:
    """Power over the 1/e^2 spot area, P/(pi w0^2); half the peak value."""
    return 0.5 * peak_intensity(power, waist)


def detuning(wavelength: float, lambda_zpl: float = 637e-9) -> float:
    """Angular detuning 2*pi*c*(1/lambda_zpl - 1/lambda) from the zero-phonon line.

    Only the red-detuned side is modeled; wavelengths at or below the ZPL
    are rejected.
    """
    if wavelength <= lambda_zpl:
        raise ValueError(
            f"wavelength {wavelength*1e9:.1f} nm is not red-detuned from the "
            f"{lambda_zpl*1e9:.1f} nm transition")
    return 2.0 * np.pi * C_LIGHT * (1.0 / lambda_zpl - 1.0 / wavelength)


def effective_field(beam: BeamSpec, model: EffectiveFieldModel) -> float:
    """Axial effective magnetic field (tesla, signed) produced by the beam.

    B = c_cal * I0 * S3 / (lambda * Delta): linear in power, odd in the
    circular polarization degree, and inversely proportional to the
    wavelength-detuning product.
    """
    s3 = stokes_s3(jones_after_qwp(X_POL, beam.qwp_deg))
    i0 = peak_intensity(beam.power, beam.waist)
    delta = detuning(beam.wavelength, model.lambda_zpl)
    return model.c_cal * i0 * s3 / (beam.wavelength * delta)


def absorption_rate(beam: BeamSpec, model: EffectiveFieldModel,
                    temperature: float = 295.0) -> float:
    """Off-resonant absorption rate kappa * I0 / Delta^2 * g(T), 1/s."""
    i0 = peak_intensity(beam.power, beam.waist)
    delta = detuning(beam.wavelength, model.lambda_zpl)
    return model.kappa * i0 / delta ** 2 * model.g(temperature)


def nv_axis_projection(axis, v) -> float:
    """Projection of lab-frame unit vector v onto a crystal axis."""
    v = np.asarray(v, dtype=float)
    if abs(np.linalg.norm(v) - 1.0) > 1e-9:
        raise ValueError("v must be a unit vector")
    axis = np.asarray(axis, dtype=float)
    return float(np.dot(axis / np.linalg.norm(axis), v))
