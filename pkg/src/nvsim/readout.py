"""Photoluminescence shot-noise model, normalization, and the field estimator.

A readout integrates a Poisson photon count whose mean drops linearly with
the excited population, counts ~ Poisson(N0 * (1 - C * p1)).  Signals are
normalized against simulated bright/dark references, and the differential
estimator converts the first-half/second-half signal difference into an
effective-field value.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .rng import stream
from .spindyn import Constants


@dataclass(frozen=True)
class ReadoutConfig:
    n0: float = 1000.0        # mean photons per shot at p1 = 0
    contrast: float = 0.05    # fractional PL drop at p1 = 1
    shots: int = 10000        # shots per sweep point

    def __post_init__(self):
        if self.n0 <= 0:
            raise ValueError("photon budget must be positive")
        if not 0 < self.contrast < 1:
            raise ValueError("contrast must lie in (0, 1)")
        if self.shots < 1:
            raise ValueError("need at least one shot")


class NormalizedSignal(NamedTuple):
    p1: float
    clamped: bool


class BeffEstimate(NamedTuple):
    b_eff: float
    phase: float
    saturated: bool


def photon_counts(p1, cfg: ReadoutConfig, seed, shots: int = 1):
    """Poisson photon count for `shots` readouts at excited population p1.

    Counts are summed over shots (a sum of Poissons is Poisson), so one draw
    with the scaled mean is exact.
    """
    p1 = np.asarray(p1, dtype=float)
    if np.any(p1 < 0) or np.any(p1 > 1):
        raise ValueError("p1 must lie in [0, 1]")
    rng = seed if isinstance(seed, np.random.Generator) else stream(seed, "photons")
    mean = shots * cfg.n0 * (1.0 - cfg.contrast * p1)
    return rng.poisson(mean)


def normalize_signal(counts, ref0, ref1) -> NormalizedSignal:
    """Two-point normalization: p1_hat = (ref0 - counts)/(ref0 - ref1).

    ref0/ref1 are reference count levels for p1 = 0 and p1 = 1 at the same
    integration.  The estimate is clamped to [-0.5, 1.5] and flagged when the
    clamp engages.
    """
    span = ref0 - ref1
    if span <= 0:
        raise ValueError("degenerate references: ref0 must exceed ref1")
    raw = (ref0 - counts) / span
    clamped = bool(raw < -0.5 or raw > 1.5)
    return NormalizedSignal(float(np.clip(raw, -0.5, 1.5)), clamped)


def estimate_beff(s_first: float, s_second: float, t0: float, amplitude: float,
                  constants: Constants = Constants()) -> BeffEstimate:
    """Differential effective-field estimate from paired echo signals.

    The two sequences acquire opposite phases, so
    phi = asin((s_second - s_first) / (2 A)) with A the expected full
    contrast in normalized units, and B = phi / (2 pi gamma_nv T0).  The asin
    argument is clamped to [-1, 1]; a clamp marks readout saturation.
    """
    if t0 <= 0:
        raise ValueError("interaction time must be positive")
    if amplitude <= 0:
        raise ValueError("contrast amplitude must be positive")
    arg = (s_second - s_first) / (2.0 * amplitude)
    saturated = bool(abs(arg) > 1.0)
    phi = float(np.arcsin(np.clip(arg, -1.0, 1.0)))
    b = phi / (2.0 * np.pi * constants.gamma_nv * t0)
    return BeffEstimate(b, phi, saturated)


def beff_stderr(sigma_first: float, sigma_second: float, t0: float,
                amplitude: float, phase: float = 0.0,
                constants: Constants = Constants()) -> float:
    """Propagated one-sigma uncertainty of estimate_beff."""
    sigma_arg = np.hypot(sigma_first, sigma_second) / (2.0 * amplitude)
    slope = 1.0 / max(np.sqrt(max(1.0 - np.sin(phase) ** 2, 1e-12)), 1e-6)
    return float(sigma_arg * slope / (2.0 * np.pi * constants.gamma_nv * t0))


def sensitivity(t2: float, cfg: ReadoutConfig,
                constants: Constants = Constants()) -> float:
    """Shot-noise-limited field sensitivity, T/sqrt(Hz), scaling as 1/sqrt(T2)."""
    if t2 <= 0:
        raise ValueError("coherence time must be positive")
    return 1.0 / (2.0 * np.pi * constants.gamma_nv * cfg.contrast
                  * np.sqrt(cfg.n0 * t2))
