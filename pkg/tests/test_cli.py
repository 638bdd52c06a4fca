"""End-to-end driver tests: exit codes, config merging, file emission,
manifest integrity, and rerun reproducibility.  All runs use small models so
the whole file stays in the seconds range.
"""

import hashlib
import json
import os

import numpy as np
import pytest

from kamrotor.cli import main


def read_manifest(outdir):
    with open(os.path.join(outdir, "manifest.json"), "r", encoding="utf-8") as fh:
        return json.load(fh)


def file_sha256(path):
    with open(path, "rb") as fh:
        return hashlib.sha256(fh.read()).hexdigest()


def csv_lines(path):
    with open(path, "r", encoding="utf-8", newline="") as fh:
        text = fh.read()
    assert "\r" not in text
    assert text.endswith("\n")
    return text.splitlines()


def test_spectrum_run_writes_outputs_and_manifest(tmp_path):
    out = str(tmp_path / "run")
    rc = main(["spectrum", "--K", "2", "--Nx", "8", "--portrait", "0.5",
               "--out", out])
    assert rc == 0
    lines = csv_lines(os.path.join(out, "area_spectrum.csv"))
    assert lines[0] == "rank,label,value,quasi_energy"
    assert len(lines) == 1 + 64
    portrait = csv_lines(os.path.join(out, "portrait_0.500.csv"))
    assert portrait[0] == ",".join(f"X{i}" for i in range(8))
    assert len(portrait) == 1 + 8

    manifest = read_manifest(out)
    assert manifest["command"] == "spectrum"
    assert manifest["config"]["K"] == 2.0
    assert manifest["config"]["Nx"] == 8
    assert manifest["kernel_backend"] in ("compiled", "fallback")
    assert set(manifest["outputs"]) == {"area_spectrum.csv", "portrait_0.500.csv"}
    for name, digest in manifest["outputs"].items():
        assert file_sha256(os.path.join(out, name)) == digest


def test_rerun_is_byte_identical(tmp_path):
    a, b = str(tmp_path / "a"), str(tmp_path / "b")
    for out in (a, b):
        assert main(["spectrum", "--K", "2", "--Nx", "8", "--out", out]) == 0
    with open(os.path.join(a, "area_spectrum.csv"), "rb") as fh:
        bytes_a = fh.read()
    with open(os.path.join(b, "area_spectrum.csv"), "rb") as fh:
        bytes_b = fh.read()
    assert bytes_a == bytes_b


def test_invalid_model_exits_2(tmp_path, capsys):
    rc = main(["spectrum", "--K", "2", "--Nx", "5", "--out", str(tmp_path / "x")])
    assert rc == 2
    assert "N must be even" in capsys.readouterr().err


def test_compute_failure_exits_3(tmp_path, capsys):
    rc = main(["truncated", "--K", "0", "--Nx", "4", "--delta", "0.3",
               "--n-cut", "96", "--min-selected", "4000",
               "--out", str(tmp_path / "x")])
    assert rc == 3
    assert "compute error" in capsys.readouterr().err


def test_flag_overrides_config_file(tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"command": "spectrum", "K": 2.0, "Nx": 8,
                               "portrait": [0.25]}))
    out = str(tmp_path / "run")
    rc = main(["spectrum", "--config", str(cfg), "--K", "3", "--out", out])
    assert rc == 0
    manifest = read_manifest(out)
    assert manifest["config"]["K"] == 3.0
    assert manifest["config"]["Nx"] == 8
    assert manifest["config"]["portrait"] == [0.25]
    assert os.path.exists(os.path.join(out, "portrait_0.250.csv"))


def test_unknown_config_key_exits_2(tmp_path, capsys):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"command": "spectrum", "K": 2.0, "Nx": 8,
                               "bogus": 1}))
    rc = main(["spectrum", "--config", str(cfg), "--out", str(tmp_path / "x")])
    assert rc == 2
    assert "unknown config keys: bogus" in capsys.readouterr().err


def test_config_command_mismatch_exits_2(tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"command": "deff", "K": 2.0, "Nx": [8, 12]}))
    assert main(["spectrum", "--config", str(cfg),
                 "--out", str(tmp_path / "x")]) == 2


def test_missing_required_exits_2(tmp_path, capsys):
    rc = main(["spectrum", "--Nx", "8", "--out", str(tmp_path / "x")])
    assert rc == 2
    assert "missing required parameters: K" in capsys.readouterr().err


def test_validate_subcommand(tmp_path, capsys):
    good = tmp_path / "good.json"
    good.write_text(json.dumps({"command": "spectrum", "K": 2.0, "Nx": 8}))
    assert main(["validate", "--config", str(good)]) == 0

    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({"command": "spectrum", "K": -1.0, "Nx": 5}))
    capsys.readouterr()
    assert main(["validate", "--config", str(bad)]) == 2
    stdout = capsys.readouterr().out
    assert "N must be even" in stdout
    assert "K must be finite and non-negative" in stdout


def test_outdir_environment_fallback(tmp_path, monkeypatch):
    out = tmp_path / "env-out"
    monkeypatch.setenv("KAMROTOR_OUTDIR", str(out))
    monkeypatch.chdir(tmp_path)
    assert main(["spectrum", "--K", "2", "--Nx", "8"]) == 0
    assert (out / "area_spectrum.csv").exists()
    assert not (tmp_path / "kamrotor-out").exists()


def test_full_scale_gate_blocks_large_runs(tmp_path, capsys):
    rc = main(["spectrum", "--K", "2", "--Nx", "128",
               "--out", str(tmp_path / "x")])
    assert rc == 2
    err = capsys.readouterr().err
    assert "--full-scale" in err
    assert not os.path.exists(os.path.join(str(tmp_path / "x"),
                                           "area_spectrum.csv"))


def test_lengths_table_covers_every_cell(tmp_path):
    out = str(tmp_path / "run")
    assert main(["lengths", "--K", "2", "--Nx", "6", "--out", out]) == 0
    lines = csv_lines(os.path.join(out, "cell_lengths.csv"))
    assert lines[0] == "X,P,length,label"
    assert len(lines) == 1 + 36


def test_orbit_direct_columns(tmp_path):
    out = str(tmp_path / "run")
    rc = main(["orbit", "--K", "2", "--Nx", "4", "--cells", "3", "--direct",
               "--t-min", "50", "--t-max", "200", "--t-count", "8",
               "--seed", "0", "--out", out])
    assert rc == 0
    lines = csv_lines(os.path.join(out, "orbit_areas.csv"))
    assert lines[0] == "X,P,area_diagonal,area_direct"
    assert len(lines) == 1 + 3


def test_deff_table(tmp_path):
    out = str(tmp_path / "run")
    rc = main(["deff", "--K", "2", "--Nx", "8,12,16,20", "--labels", "0.5",
               "--out", out])
    assert rc == 0
    lines = csv_lines(os.path.join(out, "deff.csv"))
    assert lines[0] == "label,slope,d_eff,residual"
    assert len(lines) == 2


def test_classical_run_with_grid_export(tmp_path):
    out = str(tmp_path / "run")
    rc = main(["classical", "--K", "5", "--n-cells", "16", "--n-init", "32",
               "--n-kicks", "400", "--export-grids", "1", "--seed", "1",
               "--out", out])
    assert rc == 0
    areas = csv_lines(os.path.join(out, "classical_areas.csv"))
    assert areas[0] == "rank,label,area"
    assert len(areas) == 1 + 32
    grid = csv_lines(os.path.join(out, "grid_trajectory_0.csv"))
    assert grid[0] == ",".join(f"X{i}" for i in range(16))
    assert len(grid) == 1 + 16
    manifest = read_manifest(out)
    assert any("backend" in note for note in manifest["notes"])


def test_generic_ladder_run(tmp_path):
    out = str(tmp_path / "run")
    rc = main(["generic", "--K", "2", "--Nx", "8", "--delta", "0.125",
               "--count", "2", "--out", out])
    assert rc == 0
    summary = csv_lines(os.path.join(out, "generic_summary.csv"))
    assert summary[0] == "j,M,N_p,delta_hbar,area_at_half"
    assert len(summary) == 1 + 2
    first = summary[1].split(",")
    assert (first[1], first[2]) == ("1", "8")
    assert os.path.exists(os.path.join(out, "area_spectrum_j0.csv"))
    assert os.path.exists(os.path.join(out, "area_spectrum_j1.csv"))
    manifest = read_manifest(out)
    assert any("skipped candidate" in note for note in manifest["notes"])


def test_truncated_run_emits_states_and_profiles(tmp_path):
    out = str(tmp_path / "run")
    rc = main(["truncated", "--K", "0", "--Nx", "4", "--delta", "0.3",
               "--n-cut", "96", "--min-selected", "5", "--profile-limit", "3",
               "--out", out])
    assert rc == 0
    states = csv_lines(os.path.join(out, "truncated_states.csv"))
    assert states[0] == "state_index,mean_momentum,normalized_area"
    assert len(states) >= 1 + 20
    profiles = csv_lines(os.path.join(out, "momentum_profiles.csv"))
    assert profiles[0].startswith("state_index,n1,")
    assert len(profiles) == 1 + 3
    # free rotor: every selected area is the cell width exactly
    areas = np.array([float(line.split(",")[2]) for line in states[1:]])
    np.testing.assert_allclose(areas, 4.0, rtol=1e-9)


def test_compare_run(tmp_path):
    out = str(tmp_path / "run")
    rc = main(["compare", "--K", "0.5,2", "--Nx", "8", "--n-init", "100",
               "--n-kicks", "2000", "--seed", "0", "--out", out])
    assert rc == 0
    lines = csv_lines(os.path.join(out, "demarcation.csv"))
    assert lines[0] == "K,quantum_demarcation,classical_demarcation"
    assert len(lines) == 3
    for line in lines[1:]:
        _, q, c = (float(v) for v in line.split(","))
        assert 0.0 <= q <= 1.0
        assert 0.0 <= c <= 1.0
