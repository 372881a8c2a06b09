import hashlib
import json
import math
import subprocess
import sys

import pytest

from omitlab import ConfigError
from omitlab.cli import main
from omitlab.config import resolve
from omitlab.scans import (Axis, ScanSpec, axes_for, emit, parse_csv,
                           run_scan)


def small_spectrum_spec(**overrides):
    over = {"axis_1_count": "21"}
    over.update({k: str(v) for k, v in overrides.items()})
    cfg = resolve(overrides=over)
    return ScanSpec(kind="spectrum", axes=axes_for("spectrum", cfg),
                    config=cfg)


def test_axis_validation():
    with pytest.raises(ConfigError, match="count"):
        Axis("delta_p_over_omega_m", 0.0, 1.0, 1)
    with pytest.raises(ConfigError, match="log"):
        Axis("delta_p_over_omega_m", -1.0, 1.0, 5, scale="log")
    with pytest.raises(ConfigError, match="scale"):
        Axis("delta_p_over_omega_m", 0.1, 1.0, 5, scale="cubic")
    ax = Axis("pump_power_mw", 1.0, 100.0, 3, scale="log")
    assert ax.values() == pytest.approx([1.0, 10.0, 100.0])


def test_scan_spec_guards():
    cfg = resolve()
    big = (Axis("delta_p_over_omega_m", 0, 1, 4000),
           Axis("phi_1_rad", 0, 1, 4000))
    with pytest.raises(ConfigError, match="size"):
        ScanSpec(kind="spectrum", axes=big, config=cfg)
    with pytest.raises(ConfigError, match="kind"):
        ScanSpec(kind="mystery", axes=(Axis("phi_1_rad", 0, 1, 2),),
                 config=cfg)


def test_axis_overrides_merge_with_defaults():
    cfg = resolve(overrides={"axis_1_count": "11", "axis_1_start": "-0.1",
                             "axis_1_stop": "0.1"})
    (ax,) = axes_for("spectrum", cfg)
    assert (ax.field, ax.start, ax.stop, ax.count) == \
        ("delta_p_over_omega_m", -0.1, 0.1, 11)
    with pytest.raises(ConfigError, match="numeric"):
        axes_for("spectrum", resolve(overrides={"axis_1_field":
                                                "pump_convention"}))


def test_two_point_constant_scan_is_deterministic():
    cfg = resolve(overrides={"axis_1_count": "2", "axis_1_start": "0.01",
                             "axis_1_stop": "0.01"})
    spec = ScanSpec(kind="spectrum", axes=axes_for("spectrum", cfg),
                    config=cfg)
    result = run_scan(spec)
    assert len(result.rows) == 2
    assert result.rows[0] == result.rows[1]


def test_rows_cover_grid_in_order():
    spec = small_spectrum_spec()
    result = run_scan(spec)
    assert result.columns[0] == "delta_p_over_omega_m"
    xs = [row[0] for row in result.rows]
    assert xs == sorted(xs)
    assert len(xs) == 21
    assert all(row[-1] == "ok" for row in result.rows)


def test_csv_round_trip(tmp_path):
    spec = small_spectrum_spec()
    result = run_scan(spec)
    path = tmp_path / "scan.csv"
    emit(result, "csv", str(path))
    columns, rows = parse_csv(str(path))
    assert columns == result.columns
    for got, want in zip(rows, result.rows):
        assert got[0] == want[0]
        assert got[1] == want[1]  # 17 significant digits round-trip exactly
        assert got[2] == want[2]


def test_csv_bytes_stable_and_worker_independent(tmp_path):
    spec1 = small_spectrum_spec()
    p1 = tmp_path / "a.csv"
    emit(run_scan(spec1), "csv", str(p1))
    spec2 = ScanSpec(kind=spec1.kind, axes=spec1.axes, config=spec1.config,
                     workers=2)
    p2 = tmp_path / "b.csv"
    emit(run_scan(spec2), "csv", str(p2))
    assert p1.read_bytes() == p2.read_bytes()


def test_metadata_sidecar_and_data_separation(tmp_path):
    spec = small_spectrum_spec()
    path = tmp_path / "scan.csv"
    emit(run_scan(spec), "csv", str(path))
    text = path.read_text()
    assert "timestamp" not in text
    meta = json.loads((tmp_path / "scan.csv.meta.json").read_text())
    assert meta["tool"] == "omit-lab"
    assert meta["scan_kind"] == "spectrum"
    assert "timestamp" in meta
    assert meta["config"]["eps_p_ratio"] == 0.05


def test_json_envelope(tmp_path):
    spec = small_spectrum_spec()
    path = tmp_path / "scan.json"
    emit(run_scan(spec), "json", str(path))
    blob = json.loads(path.read_text())
    assert set(blob) == {"metadata", "columns", "rows"}
    assert len(blob["rows"]) == 21


def test_failure_rows_are_flagged():
    cfg = resolve(overrides={"branch_policy": "middle", "red_sideband": "false",
                             "delta_c_hz": "947e3", "axis_1_count": "4",
                             "axis_1_start": "1", "axis_1_stop": "10"})
    spec = ScanSpec(kind="stability-map", axes=axes_for("stability-map", cfg),
                    config=cfg)
    result = run_scan(spec)
    statuses = [row[-1] for row in result.rows]
    assert "unstable-branch" in statuses  # middle branch absent at low power
    assert "ok" in statuses
    for row, status in zip(result.rows, statuses):
        if status != "ok":
            assert all(isinstance(c, float) and math.isnan(c)
                       for c in row[1:-2])


def _cli(*args):
    return main(list(args))


def test_cli_point_matches_scan_row(tmp_path):
    out = tmp_path / "s.csv"
    assert _cli("spectrum", "--set", "axis_1_count=9", "--out", str(out)) == 0
    columns, rows = parse_csv(str(out))

    import io
    from contextlib import redirect_stdout
    buf = io.StringIO()
    with redirect_stdout(buf):
        assert _cli("spectrum", "--set", "axis_1_count=9", "--point", "4") == 0
    lines = buf.getvalue().strip().splitlines()
    assert lines[0].split(",") == list(columns)
    point_row = lines[1].split(",")
    scan_row = rows[4]
    assert float(point_row[0]) == scan_row[0]
    assert float(point_row[1]) == scan_row[1]


def test_cli_exit_codes(tmp_path):
    assert _cli("spectrum", "--set", "bogus=1",
                "--out", str(tmp_path / "x.csv")) == 2
    assert _cli("spectrum", "--set", "axis_1_count=1",
                "--out", str(tmp_path / "x.csv")) == 2
    assert _cli("spectrum", "--set", "axis_1_count=4",
                "--out", "/nonexistent-dir/x.csv") == 4
    assert _cli("spectrum", "--set", "axis_1_count=4") == 2  # missing --out


def test_cli_config_file_equals_packaged_defaults(tmp_path):
    from omitlab.config import paper_params_text
    cfg_path = tmp_path / "paper.cfg"
    cfg_path.write_text(paper_params_text())
    out_a = tmp_path / "a.csv"
    out_b = tmp_path / "b.csv"
    assert _cli("spectrum", "--set", "axis_1_count=7",
                "--config", str(cfg_path), "--out", str(out_a)) == 0
    assert _cli("spectrum", "--set", "axis_1_count=7",
                "--out", str(out_b)) == 0
    assert out_a.read_bytes() == out_b.read_bytes()


def test_two_axis_custom_scan():
    cfg = resolve(overrides={
        "axis_1_count": "3", "axis_1_start": "-0.05", "axis_1_stop": "0.05",
        "axis_2_field": "pump_power_mw", "axis_2_start": "1",
        "axis_2_stop": "5", "axis_2_count": "2"})
    spec = ScanSpec(kind="spectrum", axes=axes_for("spectrum", cfg),
                    config=cfg)
    result = run_scan(spec)
    assert result.columns[:2] == ("delta_p_over_omega_m", "P_L_mW")
    assert len(result.rows) == 6
    # row-major: axis 1 outer, axis 2 inner
    assert [r[1] for r in result.rows[:2]] == [1.0, 5.0]
    assert all(r[-1] == "ok" for r in result.rows)


def test_alternate_pump_conventions_run_end_to_end():
    for convention in ("2kappa", "eta-kappa"):
        cfg = resolve(overrides={"pump_convention": convention,
                                 "axis_1_count": "3"})
        spec = ScanSpec(kind="spectrum", axes=axes_for("spectrum", cfg),
                        config=cfg)
        result = run_scan(spec)
        assert all(row[-1] == "ok" for row in result.rows)
        assert result.metadata["config"]["pump_convention"] == convention


def test_zero_power_point_is_flagged_not_fatal():
    cfg = resolve(overrides={"axis_1_field": "pump_power_mw",
                             "axis_1_start": "0", "axis_1_stop": "2",
                             "axis_1_count": "3"})
    spec = ScanSpec(kind="spectrum", axes=axes_for("spectrum", cfg),
                    config=cfg)
    result = run_scan(spec)
    assert result.rows[0][-1] == "nonfinite"  # zero probe, undefined ratio
    assert all(row[-1] == "ok" for row in result.rows[1:])


def test_emit_rejects_unknown_format(tmp_path):
    spec = small_spectrum_spec()
    with pytest.raises(ConfigError, match="format"):
        emit(run_scan(spec), "xml", str(tmp_path / "x.xml"))


def test_cli_subprocess_byte_identical(tmp_path):
    digests = []
    for name in ("r1.csv", "r2.csv"):
        out = tmp_path / name
        proc = subprocess.run(
            [sys.executable, "-m", "omitlab.cli", "sideband2",
             "--set", "axis_1_count=31", "--set", "eps_2_ratio=0.7",
             "--out", str(out)],
            capture_output=True, text=True)
        assert proc.returncode == 0, proc.stderr
        digests.append(hashlib.sha256(out.read_bytes()).hexdigest())
    assert digests[0] == digests[1]
