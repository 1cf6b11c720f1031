"""Noise models shaping the decay of the simulated signals.

Three ingredients: a Gaussian quasi-static detuning spread that produces the
inhomogeneous (T2*) envelope exp(-(t/T2*)^2), a stretched-exponential echo
envelope exp(-(2 tau/T2)^p), and the closed-form carbon-13 pseudo-spin
modulation responsible for the periodic collapse and revival of the echo.
Revivals sit at tau_k = k / (gamma_c13 * B_bias) independent of the sampled
hyperfine couplings.  An Ornstein-Uhlenbeck process models slowly varying
background frequency noise.
"""

from __future__ import annotations

import functools
from dataclasses import dataclass

import numpy as np

from .rng import stream
from .spindyn import Constants


@dataclass(frozen=True)
class BathConfig:
    """Coherence times, bias field, and the nuclear pseudo-spin ensemble."""

    t2_star: float = 2e-6          # s
    t2: float = 150e-6             # s
    stretch_p: float = 2.0
    b_bias: float = 4.45e-3        # T
    n_bath: int = 8
    hyperfine_max: float = 2 * np.pi * 150e3   # rad/s, shift scale upper bound
    k_max: float = 0.5             # contrast factor upper bound
    seed: int = 8

    def __post_init__(self):
        if not 0 < self.t2_star < self.t2:
            raise ValueError("need 0 < t2_star < t2")
        if not 1.0 <= self.stretch_p <= 3.0:
            raise ValueError("stretch exponent must lie in [1, 3]")
        if self.n_bath < 0:
            raise ValueError("bath spin count must be nonnegative")
        if not 0 < self.k_max <= 1.0:
            raise ValueError("contrast factors must lie in (0, 1]")
        if self.b_bias <= 0 or self.hyperfine_max < 0:
            raise ValueError("bias field must be positive, hyperfine scale nonnegative")

    def larmor(self, constants: Constants = Constants()) -> float:
        """Carbon-13 angular Larmor frequency under the bias field, rad/s."""
        return 2.0 * np.pi * constants.gamma_c13 * self.b_bias

    def revival_time(self, k: int = 1, constants: Constants = Constants()) -> float:
        """k-th echo revival of the half-duration tau, s."""
        return k / (constants.gamma_c13 * self.b_bias)


@dataclass(frozen=True)
class OUConfig:
    """Stationary Ornstein-Uhlenbeck frequency noise: std sigma, memory tau_c."""

    sigma: float = 2 * np.pi * 1e3   # rad/s
    tau_c: float = 1e-3              # s
    seed: int = 23

    def __post_init__(self):
        if self.sigma < 0 or self.tau_c <= 0:
            raise ValueError("need sigma >= 0 and tau_c > 0")


@functools.lru_cache(maxsize=64)
def _realization(cfg: BathConfig, larmor: float):
    """Draw the pseudo-spin couplings once per config: (omega_j, k_j)."""
    rng = stream(cfg.seed, "bath-draw")
    # uniform on the half-open interval (0, max]
    shifts = cfg.hyperfine_max * (1.0 - rng.random(cfg.n_bath))
    k_j = cfg.k_max * (1.0 - rng.random(cfg.n_bath))
    return larmor + shifts, k_j


def bath_realization(cfg: BathConfig, constants: Constants = Constants()):
    """Deterministic per-config draw of bath frequencies and contrasts."""
    return _realization(cfg, cfg.larmor(constants))


def sample_inhomogeneous_detuning(t2_star: float, seed, size=None):
    """Quasi-static detuning samples, rad/s, Gaussian with std sqrt(2)/T2*.

    The ensemble free-induction average then obeys
    <cos(delta t)> = exp(-(t/T2*)^2).
    """
    if t2_star <= 0:
        raise ValueError("t2_star must be positive")
    rng = seed if isinstance(seed, np.random.Generator) else stream(seed, "inhom")
    return rng.normal(0.0, np.sqrt(2.0) / t2_star, size)


def ou_update(x, dt: float, cfg: OUConfig, rng: np.random.Generator):
    """One exact-discretization step of the stationary OU process."""
    decay = np.exp(-dt / cfg.tau_c)
    kick = cfg.sigma * np.sqrt(1.0 - decay ** 2)
    return x * decay + kick * rng.standard_normal(np.shape(x))


def ou_sample_path(cfg: OUConfig, dt: float, n: int) -> np.ndarray:
    """Stationary OU path of n samples spaced dt apart; exact discretization."""
    if dt <= 0:
        raise ValueError("dt must be positive")
    if n < 1:
        raise ValueError("need at least one sample")
    rng = stream(cfg.seed, "ou-path")
    if cfg.sigma == 0.0:
        return np.zeros(n)
    decay = np.exp(-dt / cfg.tau_c)
    kick = cfg.sigma * np.sqrt(1.0 - decay ** 2)
    path = np.empty(n)
    path[0] = rng.normal(0.0, cfg.sigma)
    noise = rng.standard_normal(n - 1)
    for k in range(1, n):
        path[k] = path[k - 1] * decay + kick * noise[k - 1]
    return path


def echo_envelope(tau, t2: float, p: float):
    """Stretched-exponential echo envelope exp(-(2 tau / T2)^p)."""
    tau = np.asarray(tau, dtype=float)
    if np.any(tau < 0):
        raise ValueError("tau must be nonnegative")
    out = np.exp(-(2.0 * tau / t2) ** p)
    return float(out) if out.ndim == 0 else out


def echo_bath_modulation(tau, cfg: BathConfig,
                         constants: Constants = Constants()):
    """Carbon-13 collapse/revival factor of the echo at half-duration tau.

    Product over bath spins of 1 - k_j sin^2(w_L tau/2) sin^2(w_j tau/2);
    equals 1 exactly whenever w_L tau is a multiple of 2 pi.
    """
    tau = np.asarray(tau, dtype=float)
    if np.any(tau < 0):
        raise ValueError("tau must be nonnegative")
    w_l = cfg.larmor(constants)
    w_j, k_j = bath_realization(cfg, constants)
    s_l = np.sin(w_l * tau[..., None] / 2.0) ** 2
    s_j = np.sin(w_j * tau[..., None] / 2.0) ** 2
    out = np.prod(1.0 - k_j * s_l * s_j, axis=-1)
    return float(out) if out.ndim == 0 else out
