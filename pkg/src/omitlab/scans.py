"""Parameter scans over the response modules, with deterministic emission.

A scan is a grid over one or two config keys; every grid point is evaluated
by rebuilding the device and drive from the resolved config with the axis
values substituted, so any row can be reproduced in isolation from its
resolved parameters. Failures at single points become flagged rows, never
silent drops. Emitted CSV contains only the data table (metadata goes to a
JSON sidecar), so identical inputs give byte-identical files.
"""
import concurrent.futures
import functools
import json
import math
from dataclasses import dataclass
from datetime import datetime, timezone

import numpy as np

from . import __version__
from .config import ResolvedConfig, _has_coulomb, build_drive, build_system
from .errors import (BranchNotAvailableError, ConfigError, OmitLabError,
                     PhaseUndefinedError, SingularResponseError)
from .params import CoulombParams, TWO_PI, coulomb_lambda
from .stability import assess_stability
from .steady_state import (branch_labels, cubic_coeffs,
                           photon_number_branches, solve_steady)
from .sidebands import (efficiency_2nd, group_delay, solve_first_order,
                        solve_sidebands, transmission)

SCAN_KINDS = ("spectrum", "amplitude", "phase-map", "delay-vs-power",
              "sideband2", "bistability", "stability-map", "coulomb")

MAX_POINTS = 10**7

# per-kind default axes: (field, start, stop, count, scale)
_DEFAULT_AXES = {
    "spectrum": (("delta_p_over_omega_m", -0.4, 0.4, 801, "linear"),),
    "amplitude": (("eps_1_ratio", 0.0, 2.0, 201, "linear"),),
    "phase-map": (("delta_p_over_omega_m", -0.2, 0.2, 81, "linear"),
                  ("phi_1_rad", 0.0, TWO_PI, 41, "linear")),
    "delay-vs-power": (("pump_power_mw", 0.2, 7.0, 69, "linear"),),
    "sideband2": (("delta_p_over_omega_m", -0.2, 0.2, 801, "linear"),),
    "bistability": (("pump_power_mw", 0.1, 50.0, 200, "linear"),),
    "stability-map": (("pump_power_mw", 0.5, 20.0, 40, "linear"),),
    "coulomb": (("coulomb_r_0_mm", 0.5, 5.0, 100, "linear"),),
}

_KIND_COLUMNS = {
    "spectrum": ("t2",),
    "amplitude": ("t2",),
    "phase-map": ("t2",),
    "delay-vs-power": ("tau_g_us", "tau_err_us", "t2"),
    "sideband2": ("eta", "eta_pct"),
    "bistability": ("x_lower", "x_middle", "x_upper", "n_branches"),
    "stability-map": ("Delta_c", "branch", "stable", "max_re_eig"),
    "coulomb": ("lambda_rad_s", "lambda_hz"),
}

# axis config keys are renamed to the conventional column headers on output
_COLUMN_RENAME = {"pump_power_mw": "P_L_mW"}

# columns that must be finite for an ok row; bistability legitimately leaves
# absent branches empty
_REQUIRED_FINITE = {"bistability": ("x_lower", "n_branches")}


@dataclass(frozen=True)
class Axis:
    """One scan axis over a numeric config key."""

    field: str
    start: float
    stop: float
    count: int
    scale: str = "linear"

    def __post_init__(self):
        if self.count < 2:
            raise ConfigError(
                f"axis over {self.field!r}: count must be >= 2, got "
                f"{self.count}")
        if self.scale not in ("linear", "log"):
            raise ConfigError(f"axis scale must be linear or log, got "
                              f"{self.scale!r}")
        if self.scale == "log" and (self.start <= 0 or self.stop <= 0):
            raise ConfigError("log axis endpoints must be positive")

    def values(self):
        if self.scale == "log":
            return np.geomspace(self.start, self.stop, self.count)
        return np.linspace(self.start, self.stop, self.count)


@dataclass(frozen=True)
class ScanSpec:
    """A fully resolved scan request."""

    kind: str
    axes: tuple
    config: ResolvedConfig
    workers: int = 1

    def __post_init__(self):
        if self.kind not in SCAN_KINDS:
            raise ConfigError(f"unknown scan kind {self.kind!r}; expected one "
                              f"of {SCAN_KINDS}")
        if not 1 <= len(self.axes) <= 2:
            raise ConfigError("a scan takes one or two axes")
        total = 1
        for ax in self.axes:
            total *= ax.count
        if total > MAX_POINTS:
            raise ConfigError(f"scan size {total} exceeds the guard of "
                              f"{MAX_POINTS} points")
        if self.workers < 1:
            raise ConfigError("workers must be >= 1")


@dataclass(frozen=True)
class ScanResult:
    """Row-major numeric table plus a metadata block."""

    columns: tuple
    rows: list
    metadata: dict



def axes_for(kind, cfg):
    """Scan axes from config keys merged over the per-kind defaults.

    Any of field/start/stop/count can be overridden individually; an axis
    with no default (axis 2 for most kinds) must be given in full.
    """
    from .config import SCHEMA
    v = cfg.values
    axes = []
    defaults = _DEFAULT_AXES[kind]
    for i, slot in enumerate(("axis_1", "axis_2")):
        given = {p: v.get(f"{slot}_{p}")
                 for p in ("field", "start", "stop", "count")}
        has_default = i < len(defaults) and (i == 0
                                             or _wants_default_axis2(kind))
        if not has_default and all(val is None for val in given.values()):
            continue
        if has_default:
            dfield, dlo, dhi, dn, dscale = defaults[i]
        else:
            dfield = dlo = dhi = dn = None
        field = given["field"] if given["field"] is not None else dfield
        start = given["start"] if given["start"] is not None else dlo
        stop = given["stop"] if given["stop"] is not None else dhi
        count = given["count"] if given["count"] is not None else dn
        if field is None or start is None or stop is None or count is None:
            raise ConfigError(f"{slot} requires field, start, stop and count")
        if field not in SCHEMA or SCHEMA[field][0] != "float":
            raise ConfigError(
                f"{slot}_field {field!r} is not a numeric config key")
        axes.append(Axis(field, float(start), float(stop), int(count),
                         v.get(f"{slot}_scale", "linear")))
    if not axes:
        raise ConfigError("no scan axis given and no default available")
    return tuple(axes)


def _wants_default_axis2(kind):
    return kind == "phase-map"


def evaluate_point(kind, values, updates):
    """One scan point from the base config mapped through `updates`.

    Returns (cells dict, status). Pure: every output is a function of the
    arguments alone.
    """
    v = dict(values)
    v.update(updates)
    cfg = ResolvedConfig(values=v, provided=frozenset(v))
    try:
        cells = _dispatch(kind, cfg)
        status = "ok"
        checked = _REQUIRED_FINITE.get(kind, _KIND_COLUMNS[kind])
        for key in checked:
            val = cells.get(key)
            if isinstance(val, float) and not math.isfinite(val):
                status = "nonfinite"
    except ConfigError:
        raise  # usage errors abort the scan instead of flagging a row
    except BranchNotAvailableError:
        cells, status = {}, "unstable-branch"
    except (SingularResponseError, PhaseUndefinedError):
        cells, status = {}, "singular"
    except (OverflowError, FloatingPointError, OmitLabError):
        cells, status = {}, "nonfinite"
    out = {c: cells.get(c, math.nan) for c in _KIND_COLUMNS[kind]}
    return out, status


def _dispatch(kind, cfg):
    v = cfg.values
    if kind == "coulomb":
        if not _has_coulomb(v):
            raise ConfigError("coulomb scan requires the coulomb_* keys")
        sp = build_system(_without_coulomb(cfg))
        cp = CoulombParams(
            r_0=v["coulomb_r_0_mm"] * 1e-3,
            capacitance=(v["coulomb_c_1_nf"] * 1e-9,
                         v["coulomb_c_2_nf"] * 1e-9),
            voltage=(v["coulomb_v_1_v"], v["coulomb_v_2_v"]))
        lam = coulomb_lambda(cp, sp)
        return {"lambda_rad_s": lam, "lambda_hz": lam / TWO_PI}

    sp = build_system(cfg)
    if kind == "bistability":
        dc = build_drive(_fixed_detuning(cfg, sp), sp)
        roots = photon_number_branches(cubic_coeffs(sp, dc))
        labels = branch_labels(roots)
        cells = {"x_lower": math.nan, "x_middle": math.nan,
                 "x_upper": math.nan, "n_branches": len(roots)}
        for root, label in zip(roots, labels):
            cells["x_lower" if label in ("lower", "unique")
                  else f"x_{label}"] = root
        return cells

    dc = build_drive(cfg, sp)
    if kind == "stability-map":
        ss = solve_steady(sp, dc, v["branch_policy"])
        rep = assess_stability(sp, ss)
        return {"Delta_c": dc.delta_c, "branch": ss.branch_label,
                "stable": rep.stable, "max_re_eig": rep.max_real_eigenvalue}

    ss = solve_steady(sp, dc, v["branch_policy"])
    if kind in ("spectrum", "amplitude", "phase-map"):
        first = solve_first_order(sp, ss, dc)
        return {"t2": transmission(sp, dc, first)}
    if kind == "sideband2":
        sol = solve_sidebands(sp, ss, dc)
        eta = efficiency_2nd(sp, dc, sol)
        return {"eta": eta, "eta_pct": 100.0 * eta}
    if kind == "delay-vs-power":
        first = solve_first_order(sp, ss, dc)
        gd = group_delay(sp, dc, ss=ss, at=v["delay_eval_at"])
        return {"tau_g_us": gd.tau * 1e6, "tau_err_us": gd.error_estimate * 1e6,
                "t2": transmission(sp, dc, first)}
    raise ConfigError(f"unknown scan kind {kind!r}")


def _fixed_detuning(cfg, sp):
    """Bistability scans run at fixed bare detuning (default: omega_m1)."""
    v = dict(cfg.values)
    if v["red_sideband"]:
        v["red_sideband"] = False
        if v["delta_c_hz"] is None:
            v["delta_c_hz"] = sp.omega_m[0] / TWO_PI
    return ResolvedConfig(values=v, provided=cfg.provided)


def _without_coulomb(cfg):
    v = dict(cfg.values)
    for k in ("coulomb_r_0_mm", "coulomb_c_1_nf", "coulomb_c_2_nf",
              "coulomb_v_1_v", "coulomb_v_2_v"):
        v[k] = None
    return ResolvedConfig(values=v, provided=cfg.provided)


def _point_worker(args, kind, values, fields):
    idx, axis_vals = args
    updates = dict(zip(fields, axis_vals))
    cells, status = evaluate_point(kind, values, updates)
    return idx, axis_vals, cells, status


def run_scan(spec):
    """Evaluate the grid and assemble the row-major table.

    Rows are ordered by row index (axis 1 outer, axis 2 inner) regardless of
    the worker count, so output bytes do not depend on scheduling.
    """
    fields = tuple(ax.field for ax in spec.axes)
    if spec.kind == "coulomb":
        needed = ("coulomb_r_0_mm", "coulomb_c_1_nf", "coulomb_c_2_nf",
                  "coulomb_v_1_v", "coulomb_v_2_v")
        missing = [k for k in needed
                   if spec.config.values.get(k) is None and k not in fields]
        if missing:
            raise ConfigError(f"coulomb scan requires {missing} to be set")
    if ("lambda_coupling_rad_s" in fields
            and spec.config.values.get("lambda_coupling_hz") is not None):
        raise ConfigError("cannot scan lambda_coupling_rad_s while "
                          "lambda_coupling_hz is set")
    grids = [ax.values() for ax in spec.axes]
    if len(grids) == 1:
        points = [(i, (float(g),)) for i, g in enumerate(grids[0])]
    else:
        points = []
        idx = 0
        for a in grids[0]:
            for b in grids[1]:
                points.append((idx, (float(a), float(b))))
                idx += 1

    worker = functools.partial(_point_worker, kind=spec.kind,
                               values=spec.config.values, fields=fields)
    if spec.workers > 1:
        chunk = max(1, len(points) // (spec.workers * 8))
        with concurrent.futures.ProcessPoolExecutor(spec.workers) as pool:
            results = list(pool.map(worker, points, chunksize=chunk))
    else:
        results = [worker(p) for p in points]
    results.sort(key=lambda r: r[0])

    columns = (tuple(_COLUMN_RENAME.get(f, f) for f in fields)
               + _KIND_COLUMNS[spec.kind] + ("status",))
    rows = []
    for _, axis_vals, cells, status in results:
        row = list(axis_vals)
        for c in _KIND_COLUMNS[spec.kind]:
            row.append(cells[c])
        row.append(status)
        rows.append(row)

    metadata = {
        "tool": "omit-lab",
        "version": __version__,
        "scan_kind": spec.kind,
        "axes": [{"field": ax.field, "start": ax.start, "stop": ax.stop,
                  "count": ax.count, "scale": ax.scale} for ax in spec.axes],
        "config": {k: v for k, v in spec.config.values.items()
                   if v is not None},
    }
    return ScanResult(columns=columns, rows=rows, metadata=metadata)


def format_cell(value):
    """Deterministic text form of one cell; NaN becomes an empty cell."""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        if math.isnan(value):
            return ""
        return format(float(value), ".17g")
    return str(value)


def emit(result, fmt, path):
    """Write a scan result to disk.

    CSV holds only the header and data rows (byte-identical across runs);
    its metadata, including the emission timestamp, goes to `<path>.meta.json`.
    JSON holds a single envelope with both.
    """
    if fmt not in ("csv", "json"):
        raise ConfigError(f"unknown output format {fmt!r}")
    meta = dict(result.metadata)
    meta["timestamp"] = datetime.now(timezone.utc).isoformat()
    if fmt == "csv":
        lines = [",".join(result.columns)]
        for row in result.rows:
            lines.append(",".join(format_cell(c) for c in row))
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write("\n".join(lines) + "\n")
        with open(f"{path}.meta.json", "w", encoding="utf-8") as fh:
            json.dump(meta, fh, indent=2, sort_keys=True)
            fh.write("\n")
    else:
        envelope = {
            "metadata": meta,
            "columns": list(result.columns),
            "rows": [[_json_cell(c) for c in row] for row in result.rows],
        }
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(envelope, fh, indent=2, sort_keys=True)
            fh.write("\n")
    return path


def _json_cell(value):
    if isinstance(value, (np.integer,)):
        return int(value)
    if isinstance(value, (np.floating,)):
        value = float(value)
    if isinstance(value, float) and math.isnan(value):
        return None
    return value


def parse_csv(path):
    """Read back an emitted CSV as (columns, rows) with floats restored."""
    with open(path, "r", encoding="utf-8") as fh:
        lines = [ln.rstrip("\n") for ln in fh if ln.strip()]
    columns = tuple(lines[0].split(","))
    rows = []
    for ln in lines[1:]:
        row = []
        for cell in ln.split(","):
            if cell == "":
                row.append(math.nan)
            elif cell in ("true", "false"):
                row.append(cell == "true")
            else:
                try:
                    row.append(float(cell))
                except ValueError:
                    row.append(cell)
        rows.append(row)
    return columns, rows
