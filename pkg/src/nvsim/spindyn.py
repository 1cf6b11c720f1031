"""Bloch-vector spin dynamics for the two-level NV qubit (ms = 0 <-> -1).

States are 3-vectors with sz = +1 for the bright ms = 0 level, so the
excited-level population is p1 = (1 - sz)/2.  All operations accept plain
floats or numpy arrays in the state components, which lets the Monte Carlo
engine evolve every shot at once.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

_NORM_SLACK = 1e-9


@dataclass(frozen=True)
class Constants:
    """Gyromagnetic ratios in Hz/T.

    gamma_nv defaults to 28.0 GHz/T, the effective value the package is
    calibrated against; gamma_c13 sets the nuclear Larmor frequency and
    thereby the echo revival times.
    """

    gamma_nv: float = 28.0e9
    gamma_c13: float = 10.705e6

    def __post_init__(self):
        if self.gamma_nv <= 0 or self.gamma_c13 <= 0:
            raise ValueError("gyromagnetic ratios must be positive")


@dataclass(frozen=True)
class BlochState:
    sx: object
    sy: object
    sz: object

    def __post_init__(self):
        n2 = np.asarray(self.sx) ** 2 + np.asarray(self.sy) ** 2 + np.asarray(self.sz) ** 2
        if np.any(n2 > 1.0 + _NORM_SLACK):
            raise ValueError("Bloch vector norm exceeds 1")

    def norm(self):
        return np.sqrt(np.asarray(self.sx) ** 2 + np.asarray(self.sy) ** 2
                       + np.asarray(self.sz) ** 2)

    def p1(self):
        """Population of the driven (dark) level."""
        return (1.0 - np.asarray(self.sz)) / 2.0


GROUND = BlochState(0.0, 0.0, 1.0)


def rotate(s: BlochState, axis, angle) -> BlochState:
    """Rodrigues rotation of the Bloch vector about a unit axis."""
    axis = np.asarray(axis, dtype=float)
    if abs(np.linalg.norm(axis) - 1.0) > 1e-8:
        raise ValueError("rotation axis must be a unit vector")
    kx, ky, kz = axis
    ca, sa = np.cos(angle), np.sin(angle)
    dot = kx * s.sx + ky * s.sy + kz * s.sz
    cx = ky * s.sz - kz * s.sy
    cy = kz * s.sx - kx * s.sz
    cz = kx * s.sy - ky * s.sx
    return BlochState(s.sx * ca + cx * sa + kx * dot * (1.0 - ca),
                      s.sy * ca + cy * sa + ky * dot * (1.0 - ca),
                      s.sz * ca + cz * sa + kz * dot * (1.0 - ca))


def mw_pulse(s: BlochState, omega, delta, phi_mw, t) -> BlochState:
    """Rectangular microwave pulse in the rotating frame.

    Rotates about (omega cos(phi), omega sin(phi), delta) normalized, by the
    generalized Rabi angle sqrt(omega^2 + delta^2) * t.  A zero-amplitude,
    zero-detuning pulse is the identity.
    """
    if np.any(np.asarray(t) < 0):
        raise ValueError("pulse duration must be nonnegative")
    oeff = np.sqrt(np.square(omega) + np.square(delta))
    if np.all(oeff == 0):
        return s
    safe = np.where(oeff == 0, 1.0, oeff)  # zero-rate entries become identities
    kx = omega * np.cos(phi_mw) / safe
    ky = omega * np.sin(phi_mw) / safe
    kz = delta / safe
    angle = oeff * t
    ca, sa = np.cos(angle), np.sin(angle)
    dot = kx * s.sx + ky * s.sy + kz * s.sz
    cx = ky * s.sz - kz * s.sy
    cy = kz * s.sx - kx * s.sz
    cz = kx * s.sy - ky * s.sx
    return BlochState(s.sx * ca + cx * sa + kx * dot * (1.0 - ca),
                      s.sy * ca + cy * sa + ky * dot * (1.0 - ca),
                      s.sz * ca + cz * sa + kz * dot * (1.0 - ca))


def accumulate_phase(s: BlochState, b_field, t,
                     constants: Constants = Constants()) -> BlochState:
    """Free precession about z by phi = 2*pi*gamma_nv*B*t."""
    if np.any(np.asarray(t) < 0):
        raise ValueError("evolution time must be nonnegative")
    phi = 2.0 * np.pi * constants.gamma_nv * b_field * t
    return rotate_z(s, phi)


def rotate_z(s: BlochState, phi) -> BlochState:
    c, si = np.cos(phi), np.sin(phi)
    return BlochState(s.sx * c - s.sy * si, s.sx * si + s.sy * c, s.sz)


def apply_dephasing(s: BlochState, v) -> BlochState:
    """Scale the transverse components by a visibility factor v in [0, 1]."""
    v = np.asarray(v)
    if np.any(v < 0) or np.any(v > 1):
        raise ValueError("visibility factor must lie in [0, 1]")
    return BlochState(s.sx * v, s.sy * v, s.sz)


def dephase_about_axis(s: BlochState, axis, v) -> BlochState:
    """Shrink the components orthogonal to `axis` by v; used for drive-frame
    dephasing of long resonant pulses."""
    v = np.asarray(v)
    if np.any(v < 0) or np.any(v > 1):
        raise ValueError("visibility factor must lie in [0, 1]")
    axis = np.asarray(axis, dtype=float)
    kx, ky, kz = axis / np.linalg.norm(axis)
    dot = kx * s.sx + ky * s.sy + kz * s.sz
    return BlochState(kx * dot + (s.sx - kx * dot) * v,
                      ky * dot + (s.sy - ky * dot) * v,
                      kz * dot + (s.sz - kz * dot) * v)
