"""Command-line interface: config parsing, exit codes, artifacts."""

import hashlib
import json
import os
import subprocess
import sys

import pytest

from subwave.cli import (
    ConfigError,
    _THREAD_VARS,
    cfg_bool,
    cfg_centers,
    cfg_float,
    cfg_floats,
    cfg_point,
    main,
    parse_config,
)


def _write(path, text):
    path.write_text(text)
    return str(path)


# ---------------------------------------------------------------------------
# config file parsing


def test_parse_config_comments_and_blanks(tmp_path):
    path = _write(tmp_path / "a.cfg", """
# scenario header
shape = unit_disk   # trailing comment
resolution = 8

epsilon = 1e-3
""")
    cfg = parse_config(path)
    assert cfg == {"shape": "unit_disk", "resolution": "8", "epsilon": "1e-3"}


def test_parse_config_duplicate_key(tmp_path):
    path = _write(tmp_path / "a.cfg", "x = 1\nx = 2\n")
    with pytest.raises(ConfigError, match="duplicate key 'x'"):
        parse_config(path)


def test_parse_config_bad_line_reports_position(tmp_path):
    path = _write(tmp_path / "a.cfg", "shape = unit_disk\njust words\n")
    with pytest.raises(ConfigError, match=r":2:"):
        parse_config(path)


def test_parse_config_missing_file(tmp_path):
    with pytest.raises(ConfigError, match="cannot read"):
        parse_config(tmp_path / "nope.cfg")


def test_missing_required_field_names_key_and_kind():
    with pytest.raises(ConfigError,
                       match="missing required field 'epsilon' for run kind "
                             "'resonances'"):
        cfg_float({}, "epsilon", "resonances")


def test_field_converters():
    assert cfg_bool({"a": "Yes"}, "a", "t") is True
    assert cfg_bool({"a": "off"}, "a", "t") is False
    with pytest.raises(ConfigError, match="field 'a'"):
        cfg_bool({"a": "maybe"}, "a", "t")
    assert cfg_point({"p": "1, 2, 3"}, "p", "t") == [1.0, 2.0, 3.0]
    with pytest.raises(ConfigError):
        cfg_point({"p": "1, 2"}, "p", "t")
    assert cfg_centers({"c": "0,0; 1,0,0.5"}, "c", "t") == [
        [0.0, 0.0, 0.0],
        [1.0, 0.0, 0.5],
    ]
    assert cfg_floats({"v": "1; 2, 3"}, "v", "t") == [1.0, 2.0, 3.0]


# ---------------------------------------------------------------------------
# exit codes


def test_capacity_run_succeeds(tmp_path, capsys):
    cfg = _write(tmp_path / "cap.cfg", "resolution = 6\nepsilon = 1e-2\n")
    out = tmp_path / "out"
    assert main(["capacity", "--config", cfg, "--out", str(out)]) == 0
    assert (out / "capacity.json").is_file()
    assert (out / "density.csv").is_file()
    record = json.loads((out / "capacity.json").read_text())
    assert record["relative_error"] < 0.05
    assert record["scaled_capacity"] == pytest.approx(
        1e-2 * record["capacity"])
    assert "capacity[unit_disk]" in capsys.readouterr().out


def test_bad_epsilon_is_config_error(tmp_path, capsys):
    cfg = _write(tmp_path / "r.cfg", "epsilon = -0.5\n")
    code = main(["resonances", "--config", cfg, "--out", str(tmp_path / "o")])
    assert code == 2
    assert "config error" in capsys.readouterr().err


def test_missing_field_is_config_error(tmp_path, capsys):
    cfg = _write(tmp_path / "r.cfg", "alpha0 = 0.3\n")
    code = main(["resonances", "--config", cfg, "--out", str(tmp_path / "o")])
    assert code == 2
    assert "missing required field 'epsilon'" in capsys.readouterr().err


def test_unknown_shape_is_config_error(tmp_path, capsys):
    cfg = _write(tmp_path / "c.cfg", "shape = hexagon\n")
    code = main(["capacity", "--config", cfg, "--out", str(tmp_path / "o")])
    assert code == 2
    assert "unknown shape" in capsys.readouterr().err


def test_negative_seed_rejected(tmp_path, capsys):
    code = main(["capacity", "--seed", "-1", "--out", str(tmp_path / "o")])
    assert code == 2
    capsys.readouterr()


def test_scan_through_source_is_numerical_error(tmp_path, capsys):
    # the field diverges at the source, so a scan that lands exactly on
    # it is a runtime failure of the scenario rather than a config
    # mistake, hence exit code 1
    cfg = _write(tmp_path / "p.cfg",
                 "epsilon = 1e-2\nx0 = 0, 0, 0.5\nscan_count = 5\n")
    code = main(["psf", "--config", cfg, "--out", str(tmp_path / "o")])
    assert code == 1
    assert "numerical error: CoincidenceError" in capsys.readouterr().err


# ---------------------------------------------------------------------------
# artifacts


def test_resonance_artifacts(tmp_path, capsys):
    cfg = _write(tmp_path / "r.cfg",
                 "epsilon = 1e-3\ncenters = 0,0; 2,0\nalpha0 = 0.0\n")
    out = tmp_path / "out"
    assert main(["resonances", "--config", cfg, "--out", str(out)]) == 0
    lines = (out / "resonances.csv").read_text().strip().splitlines()
    assert lines[0].startswith("mode,branch")
    assert len(lines) == 1 + 4
    summary = json.loads((out / "resonances.json").read_text())
    assert summary["count"] == 4
    assert summary["within_window"] is True
    assert summary["max_gap"] < 1e-6
    capsys.readouterr()


def test_manifest_hashes_recompute(tmp_path, capsys):
    cfg = _write(tmp_path / "c.cfg", "resolution = 6\n")
    out = tmp_path / "out"
    assert main(["capacity", "--config", cfg, "--out", str(out),
                 "--seed", "3"]) == 0
    manifest = json.loads((out / "manifest.json").read_text())
    assert manifest["kind"] == "capacity"
    assert manifest["seed"] == 3
    assert set(manifest["artifacts"]) == {"capacity.json", "density.csv"}
    for name, digest in manifest["artifacts"].items():
        blob = (out / name).read_bytes()
        assert hashlib.sha256(blob).hexdigest() == digest
    capsys.readouterr()


def test_validate_integrals_deterministic(tmp_path, capsys):
    cfg = _write(tmp_path / "v.cfg", "count = 5\n")
    outs = []
    for tag in ("a", "b"):
        out = tmp_path / tag
        assert main(["validate-integrals", "--config", cfg, "--out", str(out),
                     "--seed", "7"]) == 0
        outs.append((out / "lorentzian_table.csv").read_bytes())
    assert outs[0] == outs[1]
    out_c = tmp_path / "c"
    assert main(["validate-integrals", "--config", cfg, "--out", str(out_c),
                 "--seed", "8"]) == 0
    assert (out_c / "lorentzian_table.csv").read_bytes() != outs[0]
    capsys.readouterr()


def test_validate_subset_report(tmp_path, capsys):
    cfg = _write(tmp_path / "v.cfg", "criteria = 6\n")
    out = tmp_path / "out"
    assert main(["validate", "--config", cfg, "--out", str(out)]) == 0
    printed = capsys.readouterr().out
    assert "PASS 06" in printed
    lines = (out / "validate_report.csv").read_text().strip().splitlines()
    assert lines[0] == "criterion,passed,measured,tolerance"
    assert len(lines) == 2
    report = json.loads((out / "validate_report.json").read_text())
    assert report["all_passed"] is True
    assert report["results"][0]["criterion"] == 6


# ---------------------------------------------------------------------------
# thread pinning and process entry


def test_res_threads_env_must_be_integer(tmp_path, capsys, monkeypatch):
    monkeypatch.setenv("RES_THREADS", "many")
    code = main(["capacity", "--out", str(tmp_path / "o")])
    assert code == 2
    assert "RES_THREADS" in capsys.readouterr().err


def test_threads_flag_pins_pools(tmp_path, capsys):
    saved = {var: os.environ.get(var) for var in _THREAD_VARS}
    try:
        cfg = _write(tmp_path / "c.cfg", "resolution = 6\n")
        code = main(["capacity", "--config", cfg, "--out", str(tmp_path / "o"),
                     "--threads", "2"])
        assert code == 0
        for var in _THREAD_VARS:
            assert os.environ[var] == "2"
        assert main(["capacity", "--config", cfg,
                     "--out", str(tmp_path / "o2"), "--threads", "0"]) == 2
    finally:
        for var, val in saved.items():
            if val is None:
                os.environ.pop(var, None)
            else:
                os.environ[var] = val
    capsys.readouterr()


def test_module_entry_point(tmp_path):
    cfg = _write(tmp_path / "c.cfg", "resolution = 6\n")
    proc = subprocess.run(
        [sys.executable, "-m", "subwave.cli", "capacity", "--config", cfg,
         "--out", str(tmp_path / "o")],
        capture_output=True, text=True, cwd=str(tmp_path),
    )
    assert proc.returncode == 0, proc.stderr
    assert "capacity[unit_disk]" in proc.stdout
