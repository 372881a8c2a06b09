"""Key-value config files with explicit unit suffixes.

Every physical key carries its unit in the name (`_hz`, `_rad_s`, `_mw`,
`_nm`, `_mm`, `_ng`, `_nf`, `_v`, `_rad`); the multiplication by 2*pi for
ordinary frequencies happens exactly once, in `build_system` /
`build_drive`. Unknown keys are hard errors, as is setting the same
quantity through two different unit keys.

The packaged `paper_params.cfg` holds the reference operating point used by
all scan defaults; `resolve()` with no file returns exactly those values.
"""
import importlib.resources
import math
from dataclasses import dataclass

from .errors import ConfigError
from .params import (CoulombParams, DriveConfig, TWO_PI, derive_params,
                     pump_amplitude)
from .steady_state import BRANCH_POLICIES, delta_c_for_red_sideband

_FLOAT = "float"
_BOOL = "bool"
_STR = "str"
_INT = "int"

# key -> (type, default, extra); extra is the set of choices for _STR keys
SCHEMA = {
    # device
    "omega_m_1_hz": (_FLOAT, 947e3, None),
    "omega_m_2_hz": (_FLOAT, 947e3, None),
    "mass_1_ng": (_FLOAT, 145.0, None),
    "mass_2_ng": (_FLOAT, 145.0, None),
    "quality_factor": (_FLOAT, 6700.0, None),
    "gamma_1_hz": (_FLOAT, None, None),
    "gamma_2_hz": (_FLOAT, None, None),
    "kappa_hz": (_FLOAT, 215e3, None),
    "wavelength_nm": (_FLOAT, 1064.0, None),
    "cavity_length_mm": (_FLOAT, 25.0, None),
    "eta_c": (_FLOAT, 0.5, None),
    "lambda_coupling_rad_s": (_FLOAT, 1e5, None),
    "lambda_coupling_hz": (_FLOAT, None, None),
    "g_rad_s": (_FLOAT, None, None),
    # electrostatic coupling geometry (alternative source for lambda)
    "coulomb_r_0_mm": (_FLOAT, None, None),
    "coulomb_c_1_nf": (_FLOAT, None, None),
    "coulomb_c_2_nf": (_FLOAT, None, None),
    "coulomb_v_1_v": (_FLOAT, None, None),
    "coulomb_v_2_v": (_FLOAT, None, None),
    # drives
    "pump_power_mw": (_FLOAT, 3.0, None),
    "pump_convention": (_STR, "half-kappa",
                        ("2kappa", "eta-kappa", "half-kappa")),
    "eps_p_ratio": (_FLOAT, 0.05, None),
    "eps_1_ratio": (_FLOAT, 0.0, None),
    "eps_2_ratio": (_FLOAT, 0.0, None),
    "phi_l_rad": (_FLOAT, 0.0, None),
    "phi_p_rad": (_FLOAT, 0.0, None),
    "phi_1_rad": (_FLOAT, 0.0, None),
    "phi_2_rad": (_FLOAT, 0.0, None),
    "red_sideband": (_BOOL, True, None),
    "delta_c_hz": (_FLOAT, None, None),
    "delta_p_over_omega_m": (_FLOAT, 0.0, None),
    "branch_policy": (_STR, "adiabatic-lower", BRANCH_POLICIES),
    # scan axes (defaults are per scan kind, see omitlab.scans)
    "axis_1_field": (_STR, None, None),
    "axis_1_start": (_FLOAT, None, None),
    "axis_1_stop": (_FLOAT, None, None),
    "axis_1_count": (_INT, None, None),
    "axis_1_scale": (_STR, "linear", ("linear", "log")),
    "axis_2_field": (_STR, None, None),
    "axis_2_start": (_FLOAT, None, None),
    "axis_2_stop": (_FLOAT, None, None),
    "axis_2_count": (_INT, None, None),
    "axis_2_scale": (_STR, "linear", ("linear", "log")),
    "delay_eval_at": (_STR, "cavity", ("cavity", "resonance")),
}

_COULOMB_KEYS = ("coulomb_r_0_mm", "coulomb_c_1_nf", "coulomb_c_2_nf",
                 "coulomb_v_1_v", "coulomb_v_2_v")


@dataclass(frozen=True)
class ResolvedConfig:
    """Config values in their file units plus the set of explicitly set keys."""

    values: dict
    provided: frozenset

    def was_set(self, key):
        return key in self.provided


def _parse_value(key, raw):
    kind, _, choices = SCHEMA[key]
    raw = raw.strip()
    if kind == _BOOL:
        if raw == "true":
            return True
        if raw == "false":
            return False
        raise ConfigError(f"key {key!r}: expected true or false, got {raw!r}")
    if kind == _STR:
        if choices is not None and raw not in choices:
            raise ConfigError(
                f"key {key!r}: {raw!r} is not one of {choices}")
        return raw
    if kind == _INT:
        try:
            v = int(raw)
        except ValueError as exc:
            raise ConfigError(f"key {key!r}: expected an integer, got "
                              f"{raw!r}") from exc
        return v
    try:
        v = float(raw)
    except ValueError as exc:
        raise ConfigError(f"key {key!r}: expected a number, got {raw!r}") \
            from exc
    if not math.isfinite(v):
        raise ConfigError(f"key {key!r}: value must be finite, got {raw!r}")
    return v


def parse_config(text):
    """Parse `key = value` lines; '#' starts a comment; unknown keys raise."""
    values = {}
    provided = set()
    for lineno, line in enumerate(text.splitlines(), start=1):
        body = line.split("#", 1)[0].strip()
        if not body:
            continue
        if "=" not in body:
            raise ConfigError(f"line {lineno}: expected key = value, got "
                              f"{line.rstrip()!r}")
        key, raw = body.split("=", 1)
        key = key.strip()
        if key not in SCHEMA:
            raise ConfigError(f"line {lineno}: unknown config key {key!r}")
        if key in provided:
            raise ConfigError(f"line {lineno}: duplicate key {key!r}")
        values[key] = _parse_value(key, raw)
        provided.add(key)
    return values, provided


def resolve(path=None, overrides=None):
    """Load a config file (or the packaged defaults) and apply overrides.

    `overrides` maps key to a raw string value, as given on a command line.
    """
    values = {k: spec[1] for k, spec in SCHEMA.items()}
    provided = set()
    if path is not None:
        with open(path, "r", encoding="utf-8") as fh:
            text = fh.read()
        file_values, file_provided = parse_config(text)
        values.update(file_values)
        provided |= file_provided
    if overrides:
        for key, raw in overrides.items():
            if key not in SCHEMA:
                raise ConfigError(f"unknown config key {key!r}")
            values[key] = _parse_value(key, str(raw))
            provided.add(key)
    _validate_combination(values, provided)
    return ResolvedConfig(values=values, provided=frozenset(provided))


def _validate_combination(values, provided):
    # checks that depend on values an axis may substitute per point live in
    # build_system / build_drive instead
    if "lambda_coupling_rad_s" in provided and "lambda_coupling_hz" in provided:
        raise ConfigError("lambda_coupling_rad_s and lambda_coupling_hz are "
                          "mutually exclusive")


def emit_config(values):
    """Canonical text form; floats carry 17 significant digits so a
    parse/emit round trip is exact."""
    lines = []
    for key in SCHEMA:
        v = values.get(key, SCHEMA[key][1])
        if v is None:
            continue
        if isinstance(v, bool):
            s = "true" if v else "false"
        elif isinstance(v, float):
            s = format(v, ".17g")
        else:
            s = str(v)
        lines.append(f"{key} = {s}")
    return "\n".join(lines) + "\n"


def paper_params_text():
    """Text of the packaged reference config."""
    return (importlib.resources.files("omitlab") / "data"
            / "paper_params.cfg").read_text(encoding="utf-8")


def build_system(cfg):
    """SystemParams from a resolved config (this is where _hz keys gain 2*pi)."""
    v = cfg.values if isinstance(cfg, ResolvedConfig) else cfg
    provided = cfg.provided if isinstance(cfg, ResolvedConfig) else set(v)

    if v["gamma_1_hz"] is not None or v["gamma_2_hz"] is not None:
        if v["gamma_1_hz"] is None or v["gamma_2_hz"] is None:
            raise ConfigError("gamma_1_hz and gamma_2_hz must be given together")
        gamma = (TWO_PI * v["gamma_1_hz"], TWO_PI * v["gamma_2_hz"])
        quality = None
    else:
        gamma = None
        quality = v["quality_factor"]

    # a direct lambda (explicit, or the default when no coulomb block exists)
    # wins over the coulomb-derived value; derive_params warns on the clash
    explicit_lambda = ("lambda_coupling_rad_s" in provided
                       or v["lambda_coupling_hz"] is not None)
    if v["lambda_coupling_hz"] is not None:
        lam = TWO_PI * v["lambda_coupling_hz"]
    else:
        lam = v["lambda_coupling_rad_s"]

    part = [k for k in _COULOMB_KEYS if v[k] is not None]
    if part and len(part) != len(_COULOMB_KEYS):
        missing = sorted(set(_COULOMB_KEYS) - set(part))
        raise ConfigError(f"incomplete coulomb block; missing {missing}")
    coulomb = None
    if _has_coulomb(v):
        coulomb = CoulombParams(
            r_0=v["coulomb_r_0_mm"] * 1e-3,
            capacitance=(v["coulomb_c_1_nf"] * 1e-9,
                         v["coulomb_c_2_nf"] * 1e-9),
            voltage=(v["coulomb_v_1_v"], v["coulomb_v_2_v"]))
        if not explicit_lambda:
            lam = None

    return derive_params(
        wavelength=v["wavelength_nm"] * 1e-9,
        cavity_length=v["cavity_length_mm"] * 1e-3,
        omega_m=(TWO_PI * v["omega_m_1_hz"], TWO_PI * v["omega_m_2_hz"]),
        mass=(v["mass_1_ng"] * 1e-12, v["mass_2_ng"] * 1e-12),
        kappa=TWO_PI * v["kappa_hz"],
        quality_factor=quality,
        gamma=gamma,
        eta_c=v["eta_c"],
        lambda_coupling=lam,
        coulomb=coulomb,
        g=v["g_rad_s"],
    )


def _has_coulomb(v):
    return all(v[k] is not None for k in _COULOMB_KEYS)


def build_drive(cfg, sp):
    """DriveConfig from a resolved config and its SystemParams."""
    v = cfg.values if isinstance(cfg, ResolvedConfig) else cfg
    power = v["pump_power_mw"] * 1e-3
    convention = v["pump_convention"]
    eps_l = pump_amplitude(power, sp.omega_c, sp.kappa, sp.eta_c, convention)
    if v["red_sideband"]:
        delta_c = delta_c_for_red_sideband(sp, eps_l)
    elif v["delta_c_hz"] is None:
        raise ConfigError("delta_c_hz is required when red_sideband = false")
    else:
        delta_c = TWO_PI * v["delta_c_hz"]
    eps_p = v["eps_p_ratio"] * eps_l
    xi = sp.omega_m[0] * (1.0 + v["delta_p_over_omega_m"])
    return DriveConfig(
        pump_power=power,
        omega_l=sp.omega_c - delta_c,
        delta_c=delta_c,
        eps_l=eps_l,
        eps_p=eps_p,
        xi=xi,
        eps_1=v["eps_1_ratio"] * eps_p,
        eps_2=v["eps_2_ratio"] * eps_p,
        phi_l=v["phi_l_rad"],
        phi_p=v["phi_p_rad"],
        phi_1=v["phi_1_rad"],
        phi_2=v["phi_2_rad"],
        pump_convention=convention,
    )
