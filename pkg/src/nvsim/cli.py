"""Experiment runner: reproduces each measurement as CSV plus a fit summary.

Subcommands: rabi | echo | psd-decoherence | beff-power | beff-qwp |
beff-wavelength | calibrate.  Exit codes: 0 success, 2 configuration or
usage error, 3 sequence validation error.  NVSIM_THREADS caps sweep
parallelism; results are bit-identical for any thread count because every
sweep point draws from its own seed stream and output is ordered by grid
index.

CSV format: one '#' metadata line carrying version, seed, and the exact
command line; then a header row; then comma-separated data rows with '.'
decimals (floats rendered with repr, i.e. shortest round-trip form).
"""

from __future__ import annotations

import argparse
import os
import shlex
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import __version__
from .config import ConfigError, ExperimentConfig, load_config
from .fitkit import (FitResult, fit_lm, model_damped_cosine,
                     model_inverse_detuning, model_linear, model_sin2theta,
                     model_stretched_exp)
from .optics import X_POL, jones_after_qwp, peak_intensity, stokes_s3
from .pulseseq import (SequenceError, SimConfig, build_beff, build_double_psd,
                       build_hahn, build_rabi, simulate)
from .readout import beff_stderr, estimate_beff, normalize_signal, photon_counts
from .rng import seed_for, stream


def _n_threads() -> int:
    env = os.environ.get("NVSIM_THREADS")
    if env:
        try:
            return max(1, int(env))
        except ValueError as exc:
            raise ConfigError("NVSIM_THREADS must be an integer") from exc
    return min(8, os.cpu_count() or 1)


def _run_indexed(worker, n: int):
    """Evaluate worker(0..n-1) concurrently; results ordered by index."""
    if n < 1:
        raise ConfigError("zero-length sweep grid")
    threads = min(_n_threads(), n)
    if threads == 1:
        return [worker(i) for i in range(n)]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(worker, range(n)))


def _fmt(v) -> str:
    return repr(float(v)) if isinstance(v, (float, np.floating)) else str(v)


def _write_csv(path: Path, meta: str, header, rows):
    lines = [f"# {meta}", ",".join(header)]
    lines.extend(",".join(_fmt(v) for v in row) for row in rows)
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")


def _write_summary(path: Path, meta: str, items):
    lines = [f"# {meta}"]
    lines.extend(f"{k} = {_fmt(v)}" for k, v in items)
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")


def _fit_items(fit: FitResult, names):
    items = [("status", fit.status), ("iterations", fit.iterations),
             ("chi2", fit.chi2), ("chi2_dof", fit.chi2_dof)]
    errs = fit.errors()
    for name, val, err in zip(names, fit.params, errs):
        items.append((name, float(val)))
        items.append((f"{name}_err", float(err)))
    for flag in fit.flags:
        items.append(("flag", flag))
    return items


def _sigma_floor(sigmas):
    """Positive sigma vector for fitting; unit weights when all are zero."""
    s = np.asarray(sigmas, dtype=float)
    if np.all(s == 0):
        return np.ones_like(s)
    return np.maximum(s, 1e-9 * s.max())


class Runner:
    """Shared measurement pipeline for one command invocation."""

    def __init__(self, cfg: ExperimentConfig, cmd: str):
        self.cfg = cfg
        self.cmd = cmd
        self.mode = cfg["engine", "mode"]
        self.shots = cfg.readout.shots
        self.master = cfg["engine", "master_seed"]
        self.omega = 2 * np.pi * cfg["sequence", "omega_mhz"] * 1e6
        self.timing = dict(laser_init=cfg["sequence", "laser_init_us"] * 1e-6,
                           readout=cfg["sequence", "readout_us"] * 1e-6)
        self.guard = cfg["sequence", "guard_us"] * 1e-6
        self._refs = None

    def sim_config(self, seed_seq, shots=None, temperature=None) -> SimConfig:
        return SimConfig(mode=self.mode,
                         shots=shots or self.shots,
                         seed=seed_seq,
                         bath=self.cfg.bath,
                         ou=self.cfg.ou,
                         field_model=self.cfg.field_model,
                         constants=self.cfg.constants,
                         temperature=(temperature if temperature is not None
                                      else self.cfg["calib", "temperature_k"]),
                         ou_substeps=self.cfg["engine", "ou_substeps"])

    def _reference_rates(self):
        # bright/dark normalization references, simulated once per command
        if self._refs is None:
            n_ref = max(1, int(self.shots * self.cfg["readout", "ref_factor"]))
            r0 = photon_counts(0.0, self.cfg.readout,
                               stream(self.master, self.cmd, "ref0"),
                               shots=n_ref) / n_ref
            r1 = photon_counts(1.0, self.cfg.readout,
                               stream(self.master, self.cmd, "ref1"),
                               shots=n_ref) / n_ref
            self._refs = (float(r0), float(r1))
        return self._refs

    def measure(self, seq, *path, shots=None, temperature=None):
        """Simulate + read out one sweep point; returns (p1_hat, sigma)."""
        n = shots or self.shots
        sim = self.sim_config(seed_for(self.master, self.cmd, *path, "sim"),
                              shots=n, temperature=temperature)
        res = simulate(seq, sim)
        if self.mode == "analytic":
            return res.p1, 0.0
        r0, r1 = self._reference_rates()
        counts = int(photon_counts(res.p1, self.cfg.readout,
                                   stream(self.master, self.cmd, *path, "photons"),
                                   shots=n))
        signal = normalize_signal(counts / n, r0, r1)
        sigma_photon = np.sqrt(max(counts, 1)) / (n * (r0 - r1))
        return signal.p1, float(np.hypot(res.stderr, sigma_photon))

    def echo_visibility(self, tau, *path, shots=None, temperature=None):
        """Plain-echo visibility at tau from a calibration run."""
        hahn = build_hahn(tau, self.omega, **self.timing)
        n_cal = shots or max(1, int(self.shots * self.cfg["readout", "cal_factor"]))
        p_cal, _ = self.measure(hahn, *path, shots=n_cal, temperature=temperature)
        return max(1.0 - 2.0 * p_cal, 1e-6)

    def pair_amplitude(self, v_echo, beam, tau, t0, *path, temperature=None):
        """Expected half-contrast A of a differential pair for this beam.

        The double-PSD visibility is V * exp(-2 Gamma T0) while the plain echo
        gives V, so their geometric mean is the single-pulse contrast
        V * exp(-Gamma T0) that the paired sequences actually carry.
        """
        dpsd = build_double_psd(tau, t0, beam, self.omega,
                                guard=self.guard, **self.timing)
        n_cal = max(1, int(self.shots * self.cfg["readout", "cal_factor"]))
        p_d, _ = self.measure(dpsd, *path, "dpsd-cal", shots=n_cal,
                              temperature=temperature)
        v_d = max(1.0 - 2.0 * p_d, 1e-9)
        return float(np.sqrt(v_echo * v_d)) / 2.0

    def beff_point(self, beam, tau, t0, amplitude, *path, temperature=None):
        """Paired first/second-half measurement -> (B tesla, sigma tesla)."""
        first = build_beff(tau, t0, beam, "first", self.omega,
                           guard=self.guard, **self.timing)
        second = build_beff(tau, t0, beam, "second", self.omega,
                            guard=self.guard, **self.timing)
        s_f, e_f = self.measure(first, *path, "first", temperature=temperature)
        s_s, e_s = self.measure(second, *path, "second", temperature=temperature)
        est = estimate_beff(s_f, s_s, t0, amplitude, self.cfg.constants)
        err = beff_stderr(e_f, e_s, t0, amplitude, est.phase, self.cfg.constants)
        return est.b_eff, err


# ---------------------------------------------------------------------------
# subcommands

def cmd_rabi(run: Runner, out: Path, meta: str):
    cfg = run.cfg
    npts = cfg["sequence", "rabi_points"]
    if npts < 1:
        raise ConfigError("zero-length sweep grid (sequence.rabi_points)")
    ts_us = np.linspace(0.0, cfg["sequence", "rabi_t_max_us"], npts)

    def worker(i):
        seq = build_rabi(ts_us[i] * 1e-6, run.omega, **run.timing)
        p, sigma = run.measure(seq, i)
        return ts_us[i], p, sigma

    rows = _run_indexed(worker, npts)
    _write_csv(out / "rabi.csv", meta, ("t_mw_us", "p1", "p1_stderr"), rows)

    ys = np.array([r[1] for r in rows])
    sig = _sigma_floor([r[2] for r in rows])
    fit = fit_lm(model_damped_cosine(), ts_us, ys, sig)
    items = _fit_items(fit, ("a", "t_decay_us", "p", "freq_mhz", "phi0", "c"))
    items.append(("t2_star_us", float(fit.params[1])))
    items.append(("t2_star_us_err", float(fit.errors()[1])))
    _write_summary(out / "rabi_fit.txt", meta, items)
    return 0


def _parabolic_peak(xs, ys, idx):
    """Refine a grid maximum with a 3-point parabola; returns (x, y)."""
    if idx <= 0 or idx >= len(xs) - 1:
        return float(xs[idx]), float(ys[idx])
    y0, y1, y2 = ys[idx - 1], ys[idx], ys[idx + 1]
    denom = y0 - 2.0 * y1 + y2
    if denom >= 0:  # not a proper maximum
        return float(xs[idx]), float(ys[idx])
    h = (xs[idx + 1] - xs[idx - 1]) / 2.0
    shift = 0.5 * (y0 - y2) / denom
    shift = float(np.clip(shift, -1.0, 1.0))
    peak_y = y1 - 0.25 * (y0 - y2) * shift
    return float(xs[idx] + shift * h), float(peak_y)


def _locate_revivals(taus_us, coh, predicted_us, window_us):
    peaks = []
    for tk in predicted_us:
        mask = np.abs(taus_us - tk) <= window_us
        if not np.any(mask):
            continue
        idx_local = int(np.argmax(np.where(mask, coh, -np.inf)))
        peaks.append(_parabolic_peak(taus_us, coh, idx_local))
    return peaks


def cmd_echo(run: Runner, out: Path, meta: str):
    cfg = run.cfg
    lo = cfg["sequence", "echo_tau_min_us"]
    hi = cfg["sequence", "echo_tau_max_us"]
    step = cfg["sequence", "echo_tau_step_us"]
    if step <= 0 or hi < lo:
        raise ConfigError("echo tau grid is empty or inverted")
    taus_us = np.arange(lo, hi + step / 2, step)

    def worker(i):
        seq = build_hahn(taus_us[i] * 1e-6, run.omega, **run.timing)
        p, sigma = run.measure(seq, i)
        return taus_us[i], p, sigma, 1.0 - 2.0 * p, 2.0 * sigma

    rows = _run_indexed(worker, len(taus_us))
    _write_csv(out / "echo.csv", meta,
               ("tau_us", "p1", "p1_stderr", "coherence", "coherence_stderr"),
               rows)

    coh = np.array([r[3] for r in rows])
    coh_err = np.array([r[4] for r in rows])
    spacing_us = run.cfg.bath.revival_time(1, run.cfg.constants) * 1e6
    predicted = [k * spacing_us for k in range(1, int(hi / spacing_us) + 1)]
    peaks = _locate_revivals(taus_us, coh, predicted, 0.3 * spacing_us)

    def flat_top_sample(x_peak):
        # average over the flat revival top; immune to noise-max selection bias
        mask = np.abs(taus_us - x_peak) <= max(0.75, step)
        return (float(np.mean(coh[mask])),
                float(np.sqrt(np.sum(coh_err[mask] ** 2)) / max(np.sum(mask), 1)))

    items = [("revival_spacing_pred_us", spacing_us), ("n_revivals", len(peaks))]
    fit = None
    if len(peaks) >= 4:
        # two passes: fit the revival envelope, then re-locate the maxima on
        # the envelope-corrected signal so the decaying envelope cannot drag
        # them off the revival centers
        model = model_stretched_exp()
        for _ in range(2):
            samples = [flat_top_sample(x) for x, _ in peaks]
            px = np.array([2.0 * p[0] for p in peaks])   # total free time, us
            py = np.array([s[0] for s in samples])
            fit = fit_lm(model, px, py, _sigma_floor([s[1] for s in samples]))
            env = model.evaluate(fit.params, 2.0 * taus_us)
            flat = np.where(env > 1e-6, coh / env, 0.0)
            peaks = _locate_revivals(taus_us, flat, predicted, 0.3 * spacing_us)
        peaks = [(x, flat_top_sample(x)[0]) for x, _ in peaks]
        items += _fit_items(fit, ("a", "t2_us", "p", "c"))
        items.append(("t2_us_fit", float(fit.params[1])))
    else:
        items.append(("flag", "fewer than four revivals in range; T2 fit skipped"))

    for k, (x, y) in enumerate(peaks, start=1):
        items.append((f"revival_{k}_us", x))
        items.append((f"revival_{k}_coherence", y))
    if len(peaks) >= 2:
        gaps = np.diff([p[0] for p in peaks])
        items.append(("revival_spacing_us", float(np.mean(gaps))))
    _write_summary(out / "echo_fit.txt", meta, items)
    return 0


def cmd_psd_decoherence(run: Runner, out: Path, meta: str):
    cfg = run.cfg
    tau = cfg["sequence", "psd_tau_us"] * 1e-6
    t0s_us = cfg["sequence", "psd_t0_us"]
    if len(t0s_us) < 1:
        raise ConfigError("zero-length sweep grid (sequence.psd_t0_us)")
    for t0 in t0s_us:
        if not 0 < t0 * 1e-6 <= tau - run.guard:
            raise SequenceError(
                f"psd_t0_us value {t0} does not fit into psd_tau_us halves")

    for li, lam in enumerate(cfg["laser", "psd_wavelengths_nm"]):
        hahn = build_hahn(tau, run.omega, **run.timing)
        p_base, e_base = run.measure(hahn, li, "baseline")
        v_base = max(1.0 - 2.0 * p_base, 1e-9)
        for pi, p_mw in enumerate(cfg["laser", "psd_powers_mw"]):
            beam = cfg.beam(p_mw, 45.0, lam)

            def worker(i, beam=beam, li=li, pi=pi):
                seq = build_double_psd(tau, t0s_us[i] * 1e-6, beam, run.omega,
                                       guard=run.guard, **run.timing)
                p, sigma = run.measure(seq, li, pi, i)
                vis = 1.0 - 2.0 * p
                return t0s_us[i], vis, 2.0 * sigma, vis / v_base

            rows = _run_indexed(worker, len(t0s_us))
            name = f"psd_decoherence_{lam:g}nm_{p_mw:g}mW.csv"
            _write_csv(out / name, meta,
                       ("t0_us", "visibility", "visibility_stderr",
                        "visibility_norm"), rows)
    return 0


def cmd_beff_power(run: Runner, out: Path, meta: str):
    cfg = run.cfg
    tau = cfg["sequence", "tau_us"] * 1e-6
    t0 = cfg["sequence", "t0_us"] * 1e-6
    powers = cfg["laser", "powers_mw"]
    if len(powers) < 1:
        raise ConfigError("zero-length sweep grid (laser.powers_mw)")
    v_echo = run.echo_visibility(tau, "cal")
    for li, lam in enumerate(cfg["laser", "wavelengths_nm"]):
        def worker(i, lam=lam, li=li):
            beam = cfg.beam(powers[i], 45.0, lam)
            amp = run.pair_amplitude(v_echo, beam, tau, t0, li, i)
            b, err = run.beff_point(beam, tau, t0, amp, li, i)
            return powers[i], b * 1e9, err * 1e9

        rows = _run_indexed(worker, len(powers))
        _write_csv(out / f"beff_power_{lam:g}nm.csv", meta,
                   ("power_mw", "b_eff_nt", "b_eff_stderr_nt"), rows)
        fit = fit_lm(model_linear(), np.array([r[0] for r in rows]),
                     np.array([r[1] for r in rows]),
                     _sigma_floor([r[2] for r in rows]))
        items = [("wavelength_nm", float(lam)), ("echo_visibility", v_echo)]
        items += _fit_items(fit, ("slope_nt_per_mw", "intercept_nt"))
        _write_summary(out / f"beff_power_{lam:g}nm_fit.txt", meta, items)
    return 0


def cmd_beff_qwp(run: Runner, out: Path, meta: str):
    cfg = run.cfg
    tau = cfg["sequence", "tau_us"] * 1e-6
    t0 = cfg["sequence", "t0_us"] * 1e-6
    angles = cfg["laser", "qwp_deg"]
    if len(angles) < 1:
        raise ConfigError("zero-length sweep grid (laser.qwp_deg)")
    p_mw = cfg["laser", "power_mw"]
    v_echo = run.echo_visibility(tau, "cal")
    for li, lam in enumerate(cfg["laser", "wavelengths_nm"]):
        # absorption depends on intensity only, so one pair amplitude per
        # wavelength covers every QWP angle
        amp = run.pair_amplitude(v_echo, cfg.beam(p_mw, 45.0, lam),
                                 tau, t0, li)

        def worker(i, lam=lam, li=li, amp=amp):
            beam = cfg.beam(p_mw, angles[i], lam)
            b, err = run.beff_point(beam, tau, t0, amp, li, i)
            return angles[i], b * 1e9, err * 1e9

        rows = _run_indexed(worker, len(angles))
        _write_csv(out / f"beff_qwp_{lam:g}nm.csv", meta,
                   ("qwp_deg", "b_eff_nt", "b_eff_stderr_nt"), rows)
        fit = fit_lm(model_sin2theta(), np.array([r[0] for r in rows]),
                     np.array([r[1] for r in rows]),
                     _sigma_floor([r[2] for r in rows]))
        items = [("wavelength_nm", float(lam)), ("power_mw", float(p_mw)),
                 ("echo_visibility", v_echo), ("amplitude_cal", amp)]
        items += _fit_items(fit, ("amplitude_nt", "theta0_deg", "offset_nt"))
        _write_summary(out / f"beff_qwp_{lam:g}nm_fit.txt", meta, items)
    return 0


def cmd_beff_wavelength(run: Runner, out: Path, meta: str):
    cfg = run.cfg
    tau = cfg["sequence", "tau_us"] * 1e-6
    t0 = cfg["sequence", "t0_us"] * 1e-6
    lams = cfg["laser", "wavelength_scan_nm"]
    if len(lams) < 1:
        raise ConfigError("zero-length sweep grid (laser.wavelength_scan_nm)")
    p_mw = cfg["laser", "power_mw"]
    w0 = cfg["laser", "w0_um"] * 1e-6
    v_echo = run.echo_visibility(tau, "cal")

    def worker(i):
        lam = lams[i]
        temp = cfg.temperature_for(lam)
        amp = run.pair_amplitude(v_echo, cfg.beam(p_mw, 45.0, lam), tau, t0,
                                 i, temperature=temp)
        b_plus, e_plus = run.beff_point(cfg.beam(p_mw, 45.0, lam), tau, t0,
                                        amp, i, "plus", temperature=temp)
        b_minus, e_minus = run.beff_point(cfg.beam(p_mw, -45.0, lam), tau, t0,
                                          amp, i, "minus", temperature=temp)
        b_mean = (abs(b_plus) + abs(b_minus)) / 2.0
        err = float(np.hypot(e_plus, e_minus)) / 2.0
        i0 = peak_intensity(p_mw * 1e-3, w0)
        return (lam, b_plus * 1e9, b_minus * 1e9, b_mean * 1e9, err * 1e9,
                i0, b_mean / i0, err / i0, temp)

    rows = _run_indexed(worker, len(lams))
    _write_csv(out / "beff_wavelength.csv", meta,
               ("wavelength_nm", "b_plus_nt", "b_minus_nt", "b_mean_nt",
                "b_mean_stderr_nt", "intensity_w_m2", "b_per_intensity",
                "b_per_intensity_stderr", "temperature_k"), rows)

    xs = np.array([r[0] for r in rows])
    ys = np.array([r[6] for r in rows])
    sig = _sigma_floor([r[7] for r in rows])
    fit = fit_lm(model_inverse_detuning(False), xs, ys, sig)
    items = [("power_mw", float(p_mw)), ("echo_visibility", v_echo)]
    items += _fit_items(fit, ("c_scale",))
    # c_scale is in nm units; the configured calibration constant uses meters
    items.append(("c_cal_fit", float(fit.params[0] * 1e-9)))
    items.append(("c_cal_configured", cfg["calib", "c_cal"]))
    free = fit_lm(model_inverse_detuning(True), xs, ys, sig)
    items.append(("lambda_zpl_fit_nm", float(free.params[1])))
    _write_summary(out / "beff_wavelength_fit.txt", meta, items)
    return 0


def _parse_anchor(text: str):
    parts = text.replace(",", ":").split(":")
    if len(parts) != 4:
        raise ConfigError(
            f"anchor '{text}' must be power_mw:qwp_deg:wavelength_nm:b_nt")
    try:
        p_mw, theta, lam, b_nt = (float(x) for x in parts)
    except ValueError as exc:
        raise ConfigError(f"anchor '{text}': {exc}") from exc
    return p_mw, theta, lam, b_nt


def cmd_calibrate(run: Runner, out: Path, meta: str, anchors):
    cfg = run.cfg
    if not anchors:
        raise ConfigError("calibrate needs at least one --anchor")
    solutions = []
    for text in anchors:
        p_mw, theta, lam, b_nt = _parse_anchor(text)
        if b_nt == 0:
            raise ConfigError(f"anchor '{text}': zero target field is degenerate")
        beam = cfg.beam(p_mw, theta, lam)
        s3 = stokes_s3(jones_after_qwp(X_POL, theta))
        if abs(s3) < 1e-12:
            raise ConfigError(
                f"anchor '{text}': linear polarization cannot produce a field")
        from .optics import detuning  # local import to keep module top tidy
        delta = detuning(beam.wavelength, cfg.field_model.lambda_zpl)
        i0 = peak_intensity(beam.power, beam.waist)
        c = (b_nt * 1e-9) * beam.wavelength * delta / (i0 * s3)
        if c <= 0:
            raise ConfigError(
                f"anchor '{text}': sign inconsistent with the handedness convention")
        solutions.append(c)
    spread = (max(solutions) - min(solutions)) / max(solutions)
    if spread > 1e-3:
        raise ConfigError(
            f"inconsistent anchors: c_cal candidates {solutions!r}")
    c_cal = float(np.mean(solutions))
    new_raw = {s: dict(kv) for s, kv in cfg.raw.items()}
    new_raw["calib"]["c_cal"] = repr(c_cal)
    updated = replace(cfg, raw=new_raw)
    text = updated.to_ini()
    (out / "calibrated.ini").write_text(text, encoding="utf-8")
    sys.stdout.write(f"# {meta}\n")
    sys.stdout.write(text)
    return 0


# ---------------------------------------------------------------------------
# entry point

COMMANDS = {
    "rabi": cmd_rabi,
    "echo": cmd_echo,
    "psd-decoherence": cmd_psd_decoherence,
    "beff-power": cmd_beff_power,
    "beff-qwp": cmd_beff_qwp,
    "beff-wavelength": cmd_beff_wavelength,
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", metavar="PATH", default=None,
                        help="INI experiment configuration")
    common.add_argument("--out", metavar="DIR", default="out",
                        help="output directory (default: out)")
    common.add_argument("--seed", type=int, default=None,
                        help="override engine.master_seed")
    common.add_argument("--shots", type=int, default=None,
                        help="override readout.shots")
    common.add_argument("--mode", choices=("analytic", "mc"), default=None,
                        help="override engine.mode")

    parser = argparse.ArgumentParser(
        prog="nvsim",
        description="NV-ensemble effective-field experiment simulator")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        sub.add_parser(name, parents=[common])
    cal = sub.add_parser("calibrate", parents=[common])
    cal.add_argument("--anchor", action="append", default=[],
                     metavar="P_MW:QWP_DEG:LAMBDA_NM:B_NT",
                     help="calibration anchor; repeatable")
    return parser


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if exc.code else 0

    try:
        overrides = {}
        if args.seed is not None:
            overrides[("engine", "master_seed")] = args.seed
        if args.shots is not None:
            overrides[("readout", "shots")] = args.shots
        if args.mode is not None:
            overrides[("engine", "mode")] = args.mode
        cfg = load_config(args.config, overrides)
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        run = Runner(cfg, args.command)
        meta = (f"nvsim {__version__} seed={run.master} "
                f"command=\"nvsim {shlex.join(argv)}\"")
        if args.command == "calibrate":
            return cmd_calibrate(run, out, meta, args.anchor)
        return COMMANDS[args.command](run, out, meta)
    except ConfigError as exc:
        print(f"nvsim: config error: {exc}", file=sys.stderr)
        return 2
    except SequenceError as exc:
        print(f"nvsim: validation error: {exc}", file=sys.stderr)
        return 3


def entry():
    raise SystemExit(main())


if __name__ == "__main__":
    entry()
