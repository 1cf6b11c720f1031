"""INI experiment configuration: fixed schema, hard errors on unknown keys.

Every physics default lives here.  Values keep lab-friendly units in the
file (us, mW, nm, mT, kHz) and are converted to SI when the typed objects
are built.  Unknown sections or keys, malformed values, and violated module
invariants are all reported as ConfigError with the offending line number
where one exists.
"""

from __future__ import annotations

import configparser
import io
from dataclasses import dataclass, field

import numpy as np

from .bath import BathConfig, OUConfig
from .optics import BeamSpec, EffectiveFieldModel
from .pulseseq import DEFAULT_FIELD_MODEL
from .readout import ReadoutConfig
from .spindyn import Constants


class ConfigError(Exception):
    """Configuration problem; maps to exit code 2."""


def _float(s):
    return float(s)


def _int(s):
    return int(s)


def _float_list(s):
    vals = [float(tok) for tok in s.replace(";", ",").split(",") if tok.strip()]
    return tuple(vals)


def _mode(s):
    s = s.strip().lower()
    if s not in ("analytic", "mc"):
        raise ValueError("mode must be 'analytic' or 'mc'")
    return s


def _pair_table(s):
    out = []
    for tok in s.split(","):
        tok = tok.strip()
        if not tok:
            continue
        key, _, val = tok.partition(":")
        out.append((float(key), float(val)))
    if not out:
        raise ValueError("expected 'key:value' pairs")
    return tuple(sorted(out))


# section -> key -> (parser, default-as-string)
SCHEMA = {
    "sample": {
        "t2_star_us": (_float, "2.0"),
        "t2_us": (_float, "150.0"),
        "stretch_p": (_float, "2.0"),
        "b_bias_mt": (_float, "4.45"),
        "n_bath": (_int, "8"),
        "hyperfine_max_khz": (_float, "150.0"),
        "k_max": (_float, "0.5"),
        "bath_seed": (_int, "8"),
        "ou_sigma_khz": (_float, "1.0"),
        "ou_tau_c_ms": (_float, "1.0"),
    },
    "laser": {
        "wavelengths_nm": (_float_list, "730, 785, 818"),
        "wavelength_scan_nm": (_float_list, "705, 730, 785, 818"),
        "psd_wavelengths_nm": (_float_list, "705, 818"),
        "power_mw": (_float, "20.0"),
        "powers_mw": (_float_list, "5, 8, 11, 14, 17, 20"),
        "psd_powers_mw": (_float_list, "5, 10, 15, 20"),
        "qwp_deg": (_float_list,
                    "-45, -30, -15, 0, 15, 30, 45, 60, 75, 90, 105, 120, 135"),
        "w0_um": (_float, "1.0"),
    },
    "sequence": {
        "omega_mhz": (_float, "5.0"),
        "tau_us": (_float, "21.0"),
        "t0_us": (_float, "19.0"),
        "guard_us": (_float, "1.0"),
        "psd_tau_us": (_float, "42.0"),
        "laser_init_us": (_float, "3.0"),
        "readout_us": (_float, "1.0"),
        "rabi_t_max_us": (_float, "6.0"),
        "rabi_points": (_int, "121"),
        "echo_tau_min_us": (_float, "2.0"),
        "echo_tau_max_us": (_float, "150.0"),
        "echo_tau_step_us": (_float, "0.5"),
        "psd_t0_us": (_float_list, "1, 6, 11, 16, 21, 26, 31, 36, 41"),
    },
    "calib": {
        "c_cal": (_float, repr(DEFAULT_FIELD_MODEL.c_cal)),
        "kappa": (_float, "3.5e21"),
        "g_table": (_pair_table, "265:0.5, 295:1.0"),
        "temperature_k": (_float, "295.0"),
        "temp_overrides_nm": (_pair_table, "705:265"),
    },
    "readout": {
        "n0": (_float, "1000.0"),
        "contrast": (_float, "0.05"),
        "shots": (_int, "10000"),
        "ref_factor": (_float, "10.0"),
        "cal_factor": (_float, "10.0"),
    },
    "engine": {
        "mode": (_mode, "mc"),
        "master_seed": (_int, "12345"),
        "ou_substeps": (_int, "16"),
    },
}


def _find_line(text: str, section: str, key: str):
    current = None
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.strip()
        if stripped.startswith("[") and stripped.endswith("]"):
            current = stripped[1:-1].strip()
        elif current == section and stripped.split("=")[0].split(":")[0].strip() == key:
            return lineno
    return None


@dataclass(frozen=True)
class ExperimentConfig:
    values: dict                      # section -> key -> parsed value
    raw: dict                         # section -> key -> string (effective)
    bath: BathConfig = field(compare=False, default=None)
    ou: OUConfig = field(compare=False, default=None)
    field_model: EffectiveFieldModel = field(compare=False, default=None)
    readout: ReadoutConfig = field(compare=False, default=None)
    constants: Constants = field(compare=False, default_factory=Constants)

    def __getitem__(self, key):
        section, name = key
        return self.values[section][name]

    def temperature_for(self, wavelength_nm: float) -> float:
        for lam, temp in self["calib", "temp_overrides_nm"]:
            if abs(lam - wavelength_nm) < 0.5:
                return temp
        return self["calib", "temperature_k"]

    def beam(self, power_mw: float, qwp_deg: float, wavelength_nm: float) -> BeamSpec:
        return BeamSpec(power=power_mw * 1e-3, qwp_deg=qwp_deg,
                        wavelength=wavelength_nm * 1e-9,
                        waist=self["laser", "w0_um"] * 1e-6)

    def to_ini(self) -> str:
        buf = io.StringIO()
        for section in SCHEMA:
            buf.write(f"[{section}]\n")
            for key in SCHEMA[section]:
                buf.write(f"{key} = {self.raw[section][key]}\n")
            buf.write("\n")
        return buf.getvalue()


def _build_typed(values):
    try:
        s = values["sample"]
        bath = BathConfig(t2_star=s["t2_star_us"] * 1e-6,
                          t2=s["t2_us"] * 1e-6,
                          stretch_p=s["stretch_p"],
                          b_bias=s["b_bias_mt"] * 1e-3,
                          n_bath=s["n_bath"],
                          hyperfine_max=2 * np.pi * s["hyperfine_max_khz"] * 1e3,
                          k_max=s["k_max"],
                          seed=s["bath_seed"])
        ou = OUConfig(sigma=2 * np.pi * s["ou_sigma_khz"] * 1e3,
                      tau_c=s["ou_tau_c_ms"] * 1e-3,
                      seed=s["bath_seed"] + 1)
        c = values["calib"]
        model = EffectiveFieldModel(c_cal=c["c_cal"], kappa=c["kappa"],
                                    g_table=c["g_table"])
        r = values["readout"]
        readout = ReadoutConfig(n0=r["n0"], contrast=r["contrast"], shots=r["shots"])
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    return bath, ou, model, readout


def _validate_grids(values):
    lam_all = (tuple(values["laser"]["wavelengths_nm"])
               + tuple(values["laser"]["wavelength_scan_nm"])
               + tuple(values["laser"]["psd_wavelengths_nm"]))
    for lam in lam_all:
        if not 600.0 <= lam <= 1000.0:
            raise ConfigError(f"wavelength {lam} nm outside the 600-1000 nm model range")
        if lam <= 637.0:
            raise ConfigError(f"wavelength {lam} nm not red-detuned from the 637 nm line")
    for key in ("powers_mw", "psd_powers_mw"):
        if any(p < 0 for p in values["laser"][key]):
            raise ConfigError(f"negative power in laser.{key}")
    seq = values["sequence"]
    if seq["tau_us"] <= 0 or seq["psd_tau_us"] <= 0 or seq["omega_mhz"] <= 0:
        raise ConfigError("sequence timing values must be positive")
    if seq["t0_us"] > seq["tau_us"] - seq["guard_us"]:
        raise ConfigError("sequence.t0_us must not exceed tau_us - guard_us")
    if values["engine"]["ou_substeps"] < 1:
        raise ConfigError("engine.ou_substeps must be at least 1")


def load_config(path=None, overrides=None) -> ExperimentConfig:
    """Parse an INI file (or use pure defaults) into an ExperimentConfig.

    overrides is an optional {(section, key): string} mapping applied after
    the file, used by the CLI flags.
    """
    raw = {section: {k: default for k, (_, default) in keys.items()}
           for section, keys in SCHEMA.items()}

    text = ""
    if path is not None:
        with open(path, "r", encoding="utf-8") as fh:
            text = fh.read()
        parser = configparser.ConfigParser(interpolation=None)
        parser.optionxform = str
        try:
            parser.read_string(text, source=str(path))
        except configparser.Error as exc:
            raise ConfigError(f"{path}: {exc}") from exc
        for section in parser.sections():
            if section not in SCHEMA:
                raise ConfigError(f"{path}: unknown section [{section}]")
            for key, val in parser.items(section):
                if key not in SCHEMA[section]:
                    line = _find_line(text, section, key)
                    where = f"{path}:{line}" if line else str(path)
                    raise ConfigError(f"{where}: unknown key '{key}' in [{section}]")
                raw[section][key] = val

    for (section, key), val in (overrides or {}).items():
        if section not in SCHEMA or key not in SCHEMA[section]:
            raise ConfigError(f"unknown override {section}.{key}")
        raw[section][key] = str(val)

    values = {}
    for section, keys in SCHEMA.items():
        values[section] = {}
        for key, (parse, _) in keys.items():
            try:
                values[section][key] = parse(raw[section][key])
            except (ValueError, TypeError) as exc:
                line = _find_line(text, section, key) if text else None
                where = f"{path}:{line}" if line else f"{section}.{key}"
                raise ConfigError(
                    f"{where}: bad value for '{key}': {raw[section][key]!r} ({exc})"
                ) from exc

    _validate_grids(values)
    bath, ou, model, readout = _build_typed(values)
    return ExperimentConfig(values=values, raw=raw, bath=bath, ou=ou,
                            field_model=model, readout=readout)
