"""Weighted nonlinear least squares and the model library for the sweep fits.

The solver is a Levenberg-Marquardt-style damped Gauss-Newton: multiplicative
damping (x10 on a rejected step, /10 on an accepted one, starting at 1e-3),
central-difference Jacobians with per-parameter steps max(1e-8, 1e-6 |p|),
and convergence when the relative objective change drops below 1e-10 or the
step norm below 1e-12, capped at 200 iterations.  The reported covariance is
the inverse of the damped normal matrix scaled by the residual variance.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

CONVERGED = "Converged"
MAX_ITER = "MaxIter"
SINGULAR = "Singular"

_DAMP_INIT = 1e-3
_DAMP_MAX = 1e12
_OBJ_RTOL = 1e-10
_STEP_TOL = 1e-12
_MAX_ITER = 200
_COND_LIMIT = 1e14


@dataclass(frozen=True)
class FitModel:
    name: str
    param_names: tuple
    evaluate: Callable          # (params, x) -> y
    guess: Callable             # (xs, ys) -> (p0, flags)
    bounds: tuple = ()          # ((lo, hi) or None per parameter)

    def clip(self, params):
        if not self.bounds:
            return params
        out = np.array(params, dtype=float)
        for i, b in enumerate(self.bounds):
            if b is not None:
                out[i] = np.clip(out[i], b[0], b[1])
        return out


@dataclass(frozen=True)
class FitResult:
    params: np.ndarray
    covariance: Optional[np.ndarray]
    chi2: float
    chi2_dof: float
    status: str
    iterations: int
    flags: tuple = ()

    def errors(self):
        if self.covariance is None:
            return np.full(len(self.params), np.nan)
        return np.sqrt(np.maximum(np.diag(self.covariance), 0.0))


def numeric_jacobian(evaluate, params, xs, rel_step=1e-6, min_step=1e-8):
    """Central-difference Jacobian of the model predictions, shape (n, p)."""
    params = np.asarray(params, dtype=float)
    cols = []
    for i, p in enumerate(params):
        h = max(min_step, rel_step * abs(p))
        lo, hi = params.copy(), params.copy()
        lo[i] -= h
        hi[i] += h
        cols.append((np.asarray(evaluate(hi, xs), dtype=float)
                     - np.asarray(evaluate(lo, xs), dtype=float)) / (2.0 * h))
    return np.column_stack(cols)


def _active_block_deficient(normal) -> bool:
    """True when the columns that carry information are rank deficient.

    Parameters whose Jacobian column has collapsed (e.g. the frequency of a
    zero-amplitude cosine) are inactive, not singular; real degeneracy means
    two active directions are linearly dependent.
    """
    d = np.sqrt(np.maximum(np.diag(normal), 0.0))
    if d.max() == 0.0:
        return False
    active = d > 1e-10 * d.max()
    if int(active.sum()) <= 1:
        return False
    sub = normal[np.ix_(active, active)]
    scale = np.outer(d[active], d[active])
    return bool(np.linalg.cond(sub / scale) > _COND_LIMIT)


def fit_lm(model: FitModel, xs, ys, sigmas, p0=None) -> FitResult:
    """Minimize sum(((y - f)/sigma)^2) from p0 (or the model's guess)."""
    xs = np.asarray(xs, dtype=float)
    ys = np.asarray(ys, dtype=float)
    sigmas = np.asarray(sigmas, dtype=float)
    if not (len(xs) == len(ys) == len(sigmas)):
        raise ValueError("xs, ys, sigmas must have equal length")
    if len(xs) < len(model.param_names):
        raise ValueError("need at least as many points as parameters")
    if np.any(sigmas <= 0):
        raise ValueError("sigmas must be positive")
    # canonical data order: the result is bit-identical under permutation
    order = np.lexsort((sigmas, ys, xs))
    xs, ys, sigmas = xs[order], ys[order], sigmas[order]

    flags = ()
    if p0 is None:
        p0, guess_flags = model.guess(xs, ys)
        flags = tuple(guess_flags)
    params = model.clip(np.asarray(p0, dtype=float))

    def residuals(p):
        f = np.asarray(model.evaluate(p, xs), dtype=float)
        if not np.all(np.isfinite(f)):
            raise ValueError(f"model '{model.name}' returned non-finite values")
        return (ys - f) / sigmas

    def jacobian(p):
        return numeric_jacobian(model.evaluate, p, xs) / sigmas[:, None]

    r = residuals(params)
    obj = float(r @ r)
    damping = _DAMP_INIT
    cov_damping = _DAMP_INIT       # damping in effect at the last accepted step
    status = MAX_ITER
    it = 0
    n_dof = max(len(xs) - len(params), 1)

    for it in range(1, _MAX_ITER + 1):
        jac = jacobian(params)
        normal = jac.T @ jac
        grad = jac.T @ r
        diag = np.diag(normal).copy()
        diag[diag <= 0] = 1.0

        converged = False
        stalled = True
        while damping <= _DAMP_MAX:
            try:
                step = np.linalg.solve(normal + damping * np.diag(diag), grad)
            except np.linalg.LinAlgError:
                damping *= 10.0
                continue
            step_small = float(np.linalg.norm(step)) < _STEP_TOL * (
                1.0 + float(np.linalg.norm(params)))
            try:
                trial = model.clip(params + step)
                r_trial = residuals(trial)
            except ValueError:
                if step_small:
                    converged = True
                    stalled = False
                    break
                damping *= 10.0
                continue
            obj_trial = float(r_trial @ r_trial)
            if obj_trial < obj:
                rel_drop = (obj - obj_trial) / max(obj, 1e-300)
                params, r, obj = trial, r_trial, obj_trial
                cov_damping = damping
                damping = max(damping / 10.0, 1e-15)
                stalled = False
                if rel_drop < _OBJ_RTOL or step_small:
                    converged = True
                break
            if obj_trial == obj or step_small:
                converged = True   # no possible progress: at a minimum
                stalled = False
                break
            damping *= 10.0

        if converged or stalled:
            status = CONVERGED
            break

    jf = jacobian(params)
    final_normal = jf.T @ jf
    if _active_block_deficient(final_normal):
        status = SINGULAR

    cov = None
    if status != SINGULAR:
        scale = obj / n_dof if len(xs) > len(params) else 1.0
        diag = np.diag(final_normal).copy()
        diag[diag <= 0] = 1.0
        lam = min(cov_damping, _DAMP_INIT)  # stall-phase damping must not shrink cov
        try:
            cov = np.linalg.inv(final_normal + lam * np.diag(diag)) * scale
            cov = 0.5 * (cov + cov.T)
        except np.linalg.LinAlgError:
            cov = None
            status = SINGULAR

    return FitResult(params=params, covariance=cov, chi2=obj,
                     chi2_dof=obj / n_dof, status=status, iterations=it,
                     flags=flags)


# ---------------------------------------------------------------------------
# model library

def _uniformish(xs):
    d = np.diff(xs)
    return len(d) > 0 and np.all(d > 0) and (d.max() - d.min()) < 1e-6 * d.mean() + 1e-30


def model_damped_cosine() -> FitModel:
    """y = a exp(-(t/T)^p) cos(2 pi f t + phi0) + c."""

    def evaluate(p, t):
        a, tdec, pw, f, phi0, c = p
        return a * np.exp(-np.abs(t / tdec) ** pw) * np.cos(2 * np.pi * f * t + phi0) + c

    def guess(xs, ys):
        flags = []
        order = np.argsort(xs, kind="stable")   # keep the guess order-independent
        xs, ys = np.asarray(xs)[order], np.asarray(ys)[order]
        c0 = float(np.mean(ys))
        a0 = float(np.max(ys) - np.min(ys)) / 2.0 or 1.0
        span = xs[-1] - xs[0]
        f0, phi0 = 1.0 / max(span, 1e-30), 0.0
        if _uniformish(xs) and len(xs) >= 4:
            spec = np.fft.rfft(ys - c0)
            k = int(np.argmax(np.abs(spec[1:]))) + 1
            f0 = k / (len(xs) * (xs[1] - xs[0]))
            phi0 = float(np.angle(spec[k]))
        else:
            flags.append("nonuniform grid; spectral frequency guess skipped")
        if f0 * span < 2.0:
            flags.append("fewer than two oscillation periods; frequency guess degraded")
        return np.array([a0, span / 2.0, 2.0, f0, phi0, c0]), flags

    return FitModel("damped_cosine", ("a", "t_decay", "p", "freq", "phi0", "c"),
                    evaluate, guess,
                    bounds=(None, (1e-30, np.inf), (0.5, 4.0), (0.0, np.inf),
                            None, None))


def model_stretched_exp() -> FitModel:
    """y = a exp(-(t/T)^p) + c."""

    def evaluate(p, t):
        a, tdec, pw, c = p
        return a * np.exp(-np.abs(t / tdec) ** pw) + c

    def guess(xs, ys):
        order = np.argsort(xs, kind="stable")
        xs, ys = np.asarray(xs)[order], np.asarray(ys)[order]
        c0 = float(ys[-1])
        a0 = float(ys[0] - c0)
        target = c0 + a0 / np.e
        below = np.nonzero(ys <= target if a0 > 0 else ys >= target)[0]
        tdec = float(xs[below[0]]) if len(below) else float(xs[-1] - xs[0]) / 2.0
        if tdec <= 0:
            tdec = float(np.max(xs)) / 2.0 or 1.0
        return np.array([a0 if a0 else 1.0, tdec, 2.0, c0]), []

    return FitModel("stretched_exp", ("a", "t_decay", "p", "c"),
                    evaluate, guess,
                    bounds=(None, (1e-30, np.inf), (0.5, 4.0), None))


def model_sin2theta() -> FitModel:
    """y = A sin(2 (theta - theta0)) + c, theta in degrees."""

    def evaluate(p, theta_deg):
        amp, theta0, c = p
        return amp * np.sin(2.0 * np.radians(theta_deg - theta0)) + c

    def guess(xs, ys):
        two = 2.0 * np.radians(xs)
        basis = np.column_stack([np.sin(two), np.cos(two), np.ones_like(two)])
        alpha, beta, c0 = np.linalg.lstsq(basis, ys, rcond=None)[0]
        amp = float(np.hypot(alpha, beta))
        theta0 = float(np.degrees(np.arctan2(-beta, alpha) / 2.0))
        return np.array([amp or 1.0, theta0, float(c0)]), []

    return FitModel("sin2theta", ("amplitude", "theta0_deg", "c"),
                    evaluate, guess)


def model_linear() -> FitModel:
    """y = m x + b."""

    def evaluate(p, x):
        return p[0] * x + p[1]

    def guess(xs, ys):
        m, b = np.polyfit(xs, ys, 1)
        return np.array([m, b]), []

    return FitModel("linear", ("slope", "intercept"), evaluate, guess)


_TWO_PI_C_NM = 2.0 * np.pi * 299792458.0 * 1e9  # so 1/lambda_nm gives rad/s


def model_inverse_detuning(lambda_zpl_free: bool = False,
                           lambda_zpl_nm: float = 637.0) -> FitModel:
    """y = C / (lambda * Delta(lambda)), Delta = 2 pi c (1/l_zpl - 1/lambda).

    Wavelengths are in nanometers (detunings still in rad/s), keeping the
    parameters O(100) so the finite-difference step rule is well scaled.
    With lambda_zpl_free the transition wavelength is fitted too, bounded
    below the shortest usable data wavelength to keep the detuning positive.
    """

    def check(lam, zpl):
        if np.any(lam <= zpl):
            raise ValueError("model undefined at or below the transition wavelength")

    def delta(lam_nm, zpl_nm):
        return _TWO_PI_C_NM * (1.0 / zpl_nm - 1.0 / lam_nm)

    def eval_fixed(p, lam):
        check(lam, lambda_zpl_nm)
        return p[0] / (lam * delta(lam, lambda_zpl_nm))

    def eval_free(p, lam):
        check(lam, p[1])
        return p[0] / (lam * delta(lam, p[1]))

    def guess_scale(xs, ys, zpl):
        lam0 = float(np.min(xs))
        y0 = float(np.asarray(ys)[np.argmin(xs)])
        return y0 * lam0 * delta(lam0, zpl)

    if lambda_zpl_free:
        def guess(xs, ys):
            return np.array([guess_scale(xs, ys, lambda_zpl_nm), lambda_zpl_nm]), []
        return FitModel("inverse_detuning_free", ("c_scale", "lambda_zpl_nm"),
                        eval_free, guess,
                        bounds=(None, (100.0, 695.0)))

    def guess(xs, ys):
        return np.array([guess_scale(xs, ys, lambda_zpl_nm)]), []

    return FitModel("inverse_detuning", ("c_scale",), eval_fixed, guess)


def model_library():
    """The six fit models used across the sweep commands."""
    return (model_damped_cosine(), model_stretched_exp(), model_sin2theta(),
            model_linear(), model_inverse_detuning(False),
            model_inverse_detuning(True))
