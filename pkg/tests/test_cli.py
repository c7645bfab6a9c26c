import json

import pytest
from click.testing import CliRunner

from percolab.cli import main


@pytest.fixture()
def runner():
    return CliRunner()


def test_ise_writes_tables_and_manifest(runner, tmp_path):
    out = tmp_path / "artifacts"
    r = runner.invoke(main, ["ise", "--a2", "--k2-grid", "0:1:2",
                             "--out", str(out)])
    assert r.exit_code == 0, r.output
    csv_path = out / "ise_a2.csv"
    assert csv_path.exists()
    lines = csv_path.read_text().strip().splitlines()
    assert lines[0] == "k2,a2_fourier,a2_closed_form"
    assert len(lines) == 4
    manifest = json.loads((out / "ise_manifest.json").read_text())
    assert manifest["command"] == "ise"
    assert manifest["config_hash"]
    assert str(csv_path) in manifest["outputs"]
    assert (out / "ise_report.json").exists()


def test_rerun_is_byte_identical(runner, tmp_path):
    args = ["sizes", "--d", "1", "--p", "0.3", "--samples", "1e4",
            "--cap", "1000", "--fit-min", "1", "--fit-max", "64",
            "--seed", "9"]
    r1 = runner.invoke(main, args + ["--out", str(tmp_path / "a")])
    r2 = runner.invoke(main, args + ["--out", str(tmp_path / "b")])
    assert r1.exit_code == 0 and r2.exit_code == 0
    a = (tmp_path / "a" / "sizes_sizes.csv").read_bytes()
    b = (tmp_path / "b" / "sizes_sizes.csv").read_bytes()
    assert a == b


def test_scientific_notation_counts(runner, tmp_path):
    r = runner.invoke(main, ["tree", "--law", "poisson", "--n-min", "16",
                             "--n-max", "1e2", "--out", str(tmp_path)])
    assert r.exit_code == 0, r.output


def test_config_file_with_flag_override(runner, tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"d": 1, "p": 0.3, "samples": 5000,
                               "cap": 500, "fit_min": 1, "fit_max": 32}))
    r = runner.invoke(main, ["sizes", "--config", str(cfg), "--samples",
                             "8000", "--out", str(tmp_path / "o")])
    assert r.exit_code == 0, r.output
    manifest = json.loads((tmp_path / "o" / "sizes_manifest.json").read_text())
    assert manifest["config"]["samples"] == 8000
    assert manifest["config"]["cap"] == 500


def test_config_error_exit_code(runner, tmp_path):
    r = runner.invoke(main, ["sizes", "--d", "0", "--p", "0.3",
                             "--out", str(tmp_path)])
    assert r.exit_code == 2


def test_insufficient_data_exit_code(runner, tmp_path):
    r = runner.invoke(main, ["qn", "--d", "2", "--p", "0.01", "--n", "60",
                             "--window", "0.05", "--samples", "150",
                             "--out", str(tmp_path)])
    assert r.exit_code == 3


def test_subcommands_exist(runner):
    r = runner.invoke(main, ["--help"])
    for cmd in ("sizes", "qn", "q3", "ise", "coeff", "lemmas", "diagrams",
                "pc", "tree", "compare-qn", "compare-q3", "serve"):
        assert cmd in r.output


def test_q3_flags(runner, tmp_path):
    r = runner.invoke(main, ["q3", "--d", "2", "--p", "0.35", "--n", "16",
                             "--window", "0.3", "--samples", "3e4",
                             "--k-values", "0,1.0", "--scale-d", "0.5",
                             "--out", str(tmp_path / "o")])
    assert r.exit_code == 0, r.output
    grid = (tmp_path / "o" / "q3_profile_grid.csv").read_text().splitlines()
    assert grid[0] == "k,l,mode,q3_hat,stderr"
    assert any(line.startswith("0.0,0.0,same+,1.0") or
               line.startswith("0.0,0.0,same+,1,") or
               line.startswith("0.0,0.0,same+,1.0,") for line in grid[1:])


def test_coeff_series_file(runner, tmp_path):
    series = tmp_path / "series.txt"
    series.write_text("1.0\n0.5\n0.25\n0.125\n")
    r = runner.invoke(main, ["coeff", "--n-list", "1,2",
                             "--series-file", str(series),
                             "--out", str(tmp_path / "o")])
    assert r.exit_code == 0, r.output
    rows = (tmp_path / "o" / "coeff_series_roundtrip.csv").read_text()
    assert "contour" in rows.splitlines()[0]
