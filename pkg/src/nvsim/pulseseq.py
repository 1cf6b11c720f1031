"""Timed pulse-sequence representation, builders, validation, and simulation.

Sequences are flat lists of timed elements (laser init, microwave pulses,
waits, PSD light pulses, readout).  Echo timing follows the center-to-center
convention: tau is measured between microwave pulse centers, and PSD pulses
sit centered inside an echo half, separated from the microwave pulses by a
guard interval.  PSD pulses are the only elements allowed to overlap waits.

Two engines evaluate a sequence into a readout expectation.  The analytic
engine composes the exact unitary pulse algebra with closed-form visibility
factors (stretched-exponential echo envelope, carbon-13 modulation,
off-resonant absorption).  The Monte Carlo engine samples a quasi-static
detuning and an Ornstein-Uhlenbeck phase-noise path per shot, applies the
same multiplicative echo factors, and projects each shot into a binary
readout, so its expectation matches the analytic engine while its standard
error reflects true shot statistics.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np

from . import spindyn
from .bath import BathConfig, OUConfig, echo_bath_modulation, echo_envelope, ou_update
from .optics import BeamSpec, EffectiveFieldModel, absorption_rate, effective_field
from .rng import seed_for
from .spindyn import BlochState, Constants

LASER_INIT = "laser_init"
MW_PULSE = "mw_pulse"
WAIT = "wait"
PSD_PULSE = "psd_pulse"
READOUT = "readout"

DEFAULT_OMEGA = 2 * np.pi * 5e6     # rad/s
DEFAULT_LASER_INIT = 3e-6           # s
DEFAULT_READOUT = 1e-6              # s
DEFAULT_GUARD = 1e-6                # s

DEFAULT_FIELD_MODEL = EffectiveFieldModel.calibrated(
    BeamSpec(power=0.020, qwp_deg=45.0, wavelength=785e-9, waist=1e-6),
    b_target=60e-9)


class SequenceError(ValueError):
    """Raised when a sequence cannot be built or fails validation."""


@dataclass(frozen=True)
class PulseElement:
    """One timed element; parameter fields are used per kind."""

    kind: str
    start: float
    duration: float
    omega: float = 0.0              # mw_pulse: Rabi rate, rad/s
    phi_mw: float = 0.0             # mw_pulse: drive phase, rad
    beam: Optional[BeamSpec] = None  # psd_pulse

    def __post_init__(self):
        if self.duration <= 0:
            raise SequenceError(f"{self.kind} duration must be positive")
        if self.kind == PSD_PULSE and self.beam is None:
            raise SequenceError("psd_pulse element needs a beam")

    @property
    def end(self) -> float:
        return self.start + self.duration

    @property
    def center(self) -> float:
        return self.start + 0.5 * self.duration


@dataclass(frozen=True)
class Sequence:
    elements: tuple

    def __post_init__(self):
        object.__setattr__(self, "elements",
                           tuple(sorted(self.elements, key=lambda e: (e.start, e.end))))

    @property
    def total_duration(self) -> float:
        return max(e.end for e in self.elements)

    def mw_elements(self):
        return [e for e in self.elements if e.kind == MW_PULSE]

    def psd_elements(self):
        return [e for e in self.elements if e.kind == PSD_PULSE]


@dataclass(frozen=True)
class SimConfig:
    """Engine settings shared by every sweep point."""

    mode: str = "analytic"                 # "analytic" | "mc"
    shots: int = 10000
    seed: object = 0                       # int or numpy SeedSequence
    bath: BathConfig = field(default_factory=BathConfig)
    ou: OUConfig = field(default_factory=OUConfig)
    field_model: EffectiveFieldModel = DEFAULT_FIELD_MODEL
    constants: Constants = field(default_factory=Constants)
    temperature: float = 295.0             # K
    ou_substeps: int = 16

    def __post_init__(self):
        if self.mode not in ("analytic", "mc"):
            raise ValueError("mode must be 'analytic' or 'mc'")
        if self.shots < 1:
            raise ValueError("shot count must be at least 1")
        if self.ou_substeps < 1:
            raise ValueError("need at least one OU substep per wait")


@dataclass(frozen=True)
class ReadoutExpectation:
    p1: float
    stderr: float
    shots: int
    mode: str


# ---------------------------------------------------------------------------
# builders

def _mw(center, omega, angle, phi_mw):
    dur = angle / omega
    return PulseElement(MW_PULSE, center - dur / 2, dur, omega=omega, phi_mw=phi_mw)


def build_rabi(t_mw: float, omega: float = DEFAULT_OMEGA, *,
               laser_init: float = DEFAULT_LASER_INIT,
               readout: float = DEFAULT_READOUT) -> Sequence:
    """Laser init, one resonant drive pulse of duration t_mw, readout."""
    if t_mw < 0:
        raise SequenceError("drive duration must be nonnegative")
    els = [PulseElement(LASER_INIT, 0.0, laser_init)]
    t = laser_init
    if t_mw > 0:
        els.append(PulseElement(MW_PULSE, t, t_mw, omega=omega, phi_mw=0.0))
        t += t_mw
    els.append(PulseElement(READOUT, t, readout))
    return Sequence(tuple(els))


def _echo_skeleton(tau, omega, laser_init, readout, readout_phase):
    d_half = np.pi / (2 * omega)
    d_pi = np.pi / omega
    if tau <= (d_half + d_pi) / 2:
        raise SequenceError(f"tau={tau} too short to fit the echo pulses")
    c1 = laser_init + d_half / 2
    c2 = c1 + tau
    c3 = c2 + tau
    els = [
        PulseElement(LASER_INIT, 0.0, laser_init),
        _mw(c1, omega, np.pi / 2, 0.0),
        PulseElement(WAIT, c1 + d_half / 2, tau - d_half / 2 - d_pi / 2),
        _mw(c2, omega, np.pi, 0.0),
        PulseElement(WAIT, c2 + d_pi / 2, tau - d_pi / 2 - d_half / 2),
        _mw(c3, omega, np.pi / 2, readout_phase),
        PulseElement(READOUT, c3 + d_half / 2, readout),
    ]
    return els, (c1, c2, c3)


def build_hahn(tau: float, omega: float = DEFAULT_OMEGA, *,
               laser_init: float = DEFAULT_LASER_INIT,
               readout: float = DEFAULT_READOUT,
               readout_phase: float = 0.0) -> Sequence:
    """Hahn echo pi/2 - tau - pi - tau - pi/2, tau center-to-center.

    The default readout pulse phase (about +x) maps the refocused coherence
    onto population, p1 = (1 - V)/2, so the echo signal carries the
    visibility directly.
    """
    els, _ = _echo_skeleton(tau, omega, laser_init, readout, readout_phase)
    return Sequence(tuple(els))


def _psd(center, t0, beam):
    return PulseElement(PSD_PULSE, center - t0 / 2, t0, beam=beam)


def build_double_psd(tau: float, t0: float, beam: BeamSpec,
                     omega: float = DEFAULT_OMEGA, *,
                     guard: float = DEFAULT_GUARD,
                     laser_init: float = DEFAULT_LASER_INIT,
                     readout: float = DEFAULT_READOUT) -> Sequence:
    """Hahn echo with an identical PSD pulse centered in each half.

    The two field-induced phases refocus exactly; only the absorption
    decoherence of the light survives, which is what the sequence measures.
    """
    if not 0 < t0 <= tau - guard:
        raise SequenceError(f"PSD pulse length {t0} must lie in (0, tau - guard]")
    els, (c1, c2, c3) = _echo_skeleton(tau, omega, laser_init, readout, 0.0)
    els.append(_psd((c1 + c2) / 2, t0, beam))
    els.append(_psd((c2 + c3) / 2, t0, beam))
    return Sequence(tuple(els))


def build_beff(tau: float, t0: float, beam: BeamSpec, half: str = "first",
               omega: float = DEFAULT_OMEGA, *,
               guard: float = DEFAULT_GUARD,
               laser_init: float = DEFAULT_LASER_INIT,
               readout: float = DEFAULT_READOUT) -> Sequence:
    """Hahn echo with one PSD pulse in the chosen half ("first"/"second").

    The readout pi/2 is applied about -y, making the signal sin-linear in the
    accumulated phase: p1 = (1 -/+ V sin(phi))/2 for the first/second half,
    so subtracting the two measurements isolates the field-induced phase.
    """
    if half not in ("first", "second"):
        raise SequenceError("half must be 'first' or 'second'")
    if not 0 < t0 <= tau - guard:
        raise SequenceError(f"PSD pulse length {t0} must lie in (0, tau - guard]")
    els, (c1, c2, c3) = _echo_skeleton(tau, omega, laser_init, readout, -np.pi / 2)
    center = (c1 + c2) / 2 if half == "first" else (c2 + c3) / 2
    els.append(_psd(center, t0, beam))
    return Sequence(tuple(els))


# ---------------------------------------------------------------------------
# validation

def validate(seq: Sequence) -> list:
    """Check structural invariants; returns a list of violation strings."""
    issues = []
    els = seq.elements
    if not els:
        return ["sequence is empty"]
    if els[0].kind != LASER_INIT:
        issues.append("sequence must begin with laser_init")
    if els[-1].kind != READOUT:
        issues.append("sequence must end with readout")

    solid = [e for e in els if e.kind != PSD_PULSE]
    for a, b in zip(solid, solid[1:]):
        if b.start < a.end - 1e-15:
            issues.append(f"{a.kind}@{a.start:.3e} overlaps {b.kind}@{b.start:.3e}")

    mws = seq.mw_elements()
    for a, b in zip(mws, mws[1:]):
        if not b.start > a.start:
            issues.append("microwave pulses must be strictly ordered in time")

    for p in seq.psd_elements():
        for e in solid:
            if e.kind == WAIT:
                continue
            if p.start < e.end - 1e-15 and e.start < p.end - 1e-15:
                issues.append(f"psd_pulse@{p.start:.3e} overlaps {e.kind}")
        if p.start < els[0].start or p.end > seq.total_duration:
            issues.append("psd_pulse extends outside the sequence")

    if len(mws) == 3:
        tau1 = mws[1].center - mws[0].center
        tau2 = mws[2].center - mws[1].center
        if abs(tau1 - tau2) > 1e-12 * max(tau1, tau2):
            issues.append(f"echo halves differ: {tau1:.6e} vs {tau2:.6e}")
    return issues


# ---------------------------------------------------------------------------
# serialization (line-oriented text form; see serialize_sequence docstring)

def serialize_sequence(seq: Sequence) -> str:
    """Render one element per line for golden-file comparison.

    Field order: kind,start,duration[,params...].  Params are
    omega,phi_mw for mw_pulse and power,qwp_deg,wavelength,waist for
    psd_pulse; floats are fixed '%.12e'.
    """
    lines = []
    for e in seq.elements:
        parts = [e.kind, f"{e.start:.12e}", f"{e.duration:.12e}"]
        if e.kind == MW_PULSE:
            parts += [f"{e.omega:.12e}", f"{e.phi_mw:.12e}"]
        elif e.kind == PSD_PULSE:
            b = e.beam
            parts += [f"{b.power:.12e}", f"{b.qwp_deg:.12e}",
                      f"{b.wavelength:.12e}", f"{b.waist:.12e}"]
        lines.append(",".join(parts))
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# simulation

def _drive_axis(phi_mw):
    return (np.cos(phi_mw), np.sin(phi_mw), 0.0)


def _echo_visibility(seq: Sequence, cfg: SimConfig) -> float:
    """Closed-form visibility of a three-pulse echo: envelope * bath factor."""
    mws = seq.mw_elements()
    tau1 = mws[1].center - mws[0].center
    tau2 = mws[2].center - mws[1].center
    half = (tau1 + tau2) / 2
    return float(echo_envelope(half, cfg.bath.t2, cfg.bath.stretch_p)
                 * echo_bath_modulation(half, cfg.bath, cfg.constants))


def _psd_effects(el: PulseElement, cfg: SimConfig):
    b_eff = effective_field(el.beam, cfg.field_model)
    rate = absorption_rate(el.beam, cfg.field_model, cfg.temperature)
    phi = 2 * np.pi * cfg.constants.gamma_nv * b_eff * el.duration
    return phi, float(np.exp(-rate * el.duration))


def _simulate_analytic(seq: Sequence, cfg: SimConfig) -> ReadoutExpectation:
    mws = seq.mw_elements()
    n_mw = len(mws)
    v_late = 1.0
    if n_mw == 3:
        v_late = _echo_visibility(seq, cfg)
    elif n_mw == 2:
        span = mws[1].center - mws[0].center
        v_late = float(np.exp(-(span / cfg.bath.t2_star) ** 2))

    state = spindyn.GROUND
    seen = 0
    for el in seq.elements:
        if el.kind == LASER_INIT:
            state = spindyn.GROUND
        elif el.kind == MW_PULSE:
            seen += 1
            if seen == n_mw and n_mw >= 2:
                state = spindyn.apply_dephasing(state, v_late)
            state = spindyn.rotate(state, _drive_axis(el.phi_mw),
                                   el.omega * el.duration)
            if n_mw == 1:
                # long resonant drive: inhomogeneous spread damps the
                # oscillating component with the T2* Gaussian
                damp = float(np.exp(-(el.duration / cfg.bath.t2_star) ** 2))
                state = spindyn.dephase_about_axis(state, _drive_axis(el.phi_mw), damp)
        elif el.kind == PSD_PULSE:
            phi, vis = _psd_effects(el, cfg)
            state = spindyn.rotate_z(state, phi)
            state = spindyn.apply_dephasing(state, vis)
    return ReadoutExpectation(float(state.p1()), 0.0, 1, "analytic")


def _engine_rng(cfg: SimConfig) -> np.random.Generator:
    s = cfg.seed
    ss = s if isinstance(s, np.random.SeedSequence) else seed_for(int(s), "engine")
    return np.random.default_rng(ss)


def _simulate_mc(seq: Sequence, cfg: SimConfig) -> ReadoutExpectation:
    rng = _engine_rng(cfg)
    n = cfg.shots
    t2s = cfg.bath.t2_star
    delta = rng.normal(0.0, np.sqrt(2.0) / t2s, n)   # quasi-static detuning
    x_ou = rng.normal(0.0, cfg.ou.sigma, n)          # stationary OU start

    mws = seq.mw_elements()
    n_mw = len(mws)
    v_late = _echo_visibility(seq, cfg) if n_mw == 3 else 1.0

    zeros = np.zeros(n)
    state = BlochState(zeros, zeros, np.ones(n))
    seen = 0
    for el in seq.elements:
        if el.kind == PSD_PULSE:
            # overlaps a wait; the wait itself advances the OU clock
            phi, vis = _psd_effects(el, cfg)
            state = spindyn.rotate_z(state, phi)
            state = spindyn.apply_dephasing(state, vis)
            continue
        if el.kind == LASER_INIT:
            state = BlochState(zeros, zeros, np.ones(n))
        elif el.kind == WAIT:
            phase = delta * el.duration
            if cfg.ou.sigma > 0:
                m = cfg.ou_substeps
                dt = el.duration / m
                acc = 0.5 * x_ou
                for _ in range(m - 1):
                    x_ou = ou_update(x_ou, dt, cfg.ou, rng)
                    acc = acc + x_ou
                x_ou = ou_update(x_ou, dt, cfg.ou, rng)
                phase = phase + (acc + 0.5 * x_ou) * dt
            state = spindyn.rotate_z(state, phase)
        elif el.kind == MW_PULSE:
            seen += 1
            if seen == n_mw and n_mw == 3:
                state = spindyn.apply_dephasing(state, v_late)
            if n_mw == 1:
                # single long drive: the quasi-static offset rides on the
                # drive as a rate shift, which reproduces the Gaussian T2*
                # envelope of the ensemble Rabi signal
                angle = (el.omega + delta) * el.duration
            else:
                angle = el.omega * el.duration
            state = spindyn.rotate(state, _drive_axis(el.phi_mw), angle)
            if cfg.ou.sigma > 0:
                x_ou = ou_update(x_ou, el.duration, cfg.ou, rng)
        elif el.kind == READOUT:
            pass

    outcomes = (rng.random(n) < state.p1()).astype(float)
    p_hat = float(outcomes.mean())
    stderr = float(outcomes.std(ddof=1) / np.sqrt(n)) if n > 1 else 0.5
    return ReadoutExpectation(p_hat, stderr, n, "mc")


def simulate(seq: Sequence, cfg: SimConfig) -> ReadoutExpectation:
    """Evaluate a sequence into (p1, stderr) with the configured engine."""
    issues = validate(seq)
    if issues:
        raise SequenceError("; ".join(issues))
    if cfg.mode == "analytic":
        return _simulate_analytic(seq, cfg)
    return _simulate_mc(seq, cfg)


def with_seed(cfg: SimConfig, seed) -> SimConfig:
    """Copy of cfg addressed to a different random stream."""
    return replace(cfg, seed=seed)
