"""End-to-end command-line behavior: parsing, files, exit codes."""

from __future__ import annotations

import contextlib
import io
import json
import math

import pytest

from roundopt.cli import main, parse_rounds, parse_time


def run(*argv):
    out, err = io.StringIO(), io.StringIO()
    with contextlib.redirect_stdout(out), contextlib.redirect_stderr(err):
        code = main(list(argv))
    return code, out.getvalue(), err.getvalue()


def test_parse_time_units_and_multiples():
    assert parse_time("2T", 1.5) == 3.0
    assert parse_time("T", 2.0) == 2.0
    assert parse_time("900ns") == pytest.approx(900e-9, rel=1e-15)
    assert parse_time("10us") == pytest.approx(10e-6, rel=1e-15)
    assert parse_time("2ms") == pytest.approx(2e-3, rel=1e-15)
    assert parse_time("1.5s") == 1.5
    assert parse_time("0.25") == 0.25
    assert parse_time(3) == 3.0
    with pytest.raises(ValueError):
        parse_time("2T")  # relative with no reference
    with pytest.raises(ValueError):
        parse_time("abc")


def test_parse_rounds_specs():
    assert parse_rounds("5:80:5") == list(range(5, 81, 5))
    assert parse_rounds("4:6") == [4, 5, 6]
    assert parse_rounds("7") == [7]
    assert parse_rounds(9) == [9]
    for bad in ("0:5", "6:2", "1:9:0", "1:2:3:4"):
        with pytest.raises(ValueError):
            parse_rounds(bad)


def test_empty_arguments_print_usage():
    code, _, err = run()
    assert code == 2
    assert "usage" in err


def test_unknown_flag_exits_two():
    code, _, _ = run("sweep", "--bogus", "1")
    assert code == 2


def test_invalid_noise_names_the_violated_invariant():
    code, _, err = run(
        "emit-circuit", "--d", "3", "--rounds", "1", "--q", "0.7"
    )
    assert code == 2
    assert "q must be" in err


def test_layout_and_emit_outputs(tmp_path):
    code, out, _ = run("layout", "--d", "3")
    assert code == 0 and "distance 3" in out

    path = tmp_path / "circ.txt"
    code, out, _ = run(
        "emit-circuit", "--d", "3", "--rounds", "2", "--out", str(path)
    )
    assert code == 0 and out == ""
    text = path.read_text()
    assert "# round 3 (perfect)" in text

    code, out, _ = run("emit-graph", "--d", "3", "--rounds", "2")
    assert code == 0
    lines = out.strip().splitlines()
    assert lines[0] == "family,u,v,probability,weight,obs_mask"
    assert {line.split(",")[0] for line in lines[1:]} == {"x", "z"}
    boundary_rows = [line for line in lines[1:] if line.split(",")[2] == "-1"]
    assert boundary_rows


def test_validate_passes_and_fails_by_schedule():
    code, out, _ = run("validate", "--d", "3", "--rounds", "2")
    assert code == 0
    assert "fault distance = 3 (basis x)" in out
    assert "fault distance = 3 (basis y)" in out
    assert "fault distance = 3 (basis z)" in out

    code, out, _ = run(
        "validate", "--d", "3", "--rounds", "2", "--schedule", "swapped"
    )
    assert code == 1
    assert "fault distance = 2" in out


def test_sweep_writes_deterministic_files(tmp_path):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    args = (
        "sweep", "--d", "3", "--rounds", "2:6:2", "--shots", "500",
        "--seed", "4", "--t", "1.0",
    )
    code, out, _ = run(*args, "--out", str(a))
    assert code == 0 and "optimal rounds" in out
    code, _, _ = run(*args, "--out", str(b), "--workers", "2")
    assert code == 0
    assert a.read_bytes() == b.read_bytes()
    rows = a.read_text().strip().splitlines()
    assert len(rows) == 4  # header + N in {2, 4, 6}
    meta = json.loads((tmp_path / "a.meta.json").read_text())
    assert meta["config"]["rounds"] == [2, 4, 6]
    assert meta["config"]["t1"] == 2.0  # "2T" resolved against t = 1.0
    assert meta["seed"] == 4
    assert "design_flags" in meta


def test_sweep_requires_d_and_rounds():
    code, _, err = run("sweep", "--shots", "10")
    assert code == 2
    assert "needs --d and --rounds" in err


def test_config_file_merging(tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"shots": 300, "seed": 9, "p": 0.01}))
    out_csv = tmp_path / "s.csv"
    code, _, _ = run(
        "sweep", "--d", "3", "--rounds", "3", "--config", str(cfg),
        "--shots", "400", "--out", str(out_csv),
    )
    assert code == 0
    meta = json.loads((tmp_path / "s.meta.json").read_text())
    assert meta["config"]["shots"] == 400  # flag beats file
    assert meta["seed"] == 9  # file beats default
    assert meta["config"]["p"] == 0.01

    cfg.write_text(json.dumps({"nonsense": 1}))
    code, _, err = run(
        "sweep", "--d", "3", "--rounds", "3", "--config", str(cfg),
        "--out", str(out_csv),
    )
    assert code == 2 and "nonsense" in err


def test_heatmap_csv_and_summary(tmp_path):
    path = tmp_path / "h.csv"
    code, out, _ = run(
        "heatmap", "--d", "3", "--rounds", "2:4:2", "--shots", "200",
        "--axis1", "t1=1T,3T", "--axis2", "p=0.004,0.008", "--out", str(path),
    )
    assert code == 0
    lines = path.read_text().strip().splitlines()
    assert lines[0].startswith("t1,p,N,")
    assert len(lines) == 1 + 4 * 2
    assert out.count("optimal rounds") == 4
    meta = json.loads((tmp_path / "h.meta.json").read_text())
    assert meta["config"]["axis1"] == {"param": "t1", "values": [1.0, 3.0]}

    code, _, err = run(
        "heatmap", "--d", "3", "--rounds", "2", "--axis1", "xx=1",
        "--axis2", "p=0.1", "--out", str(path),
    )
    assert code == 2 and "axis" in err


def test_analytic_table_and_feasibility():
    code, out, _ = run("analytic", "--d", "5,9")
    assert code == 0
    lines = out.strip().splitlines()
    assert lines[0] == "d,n_star_x,n_star_z,n_star_combined"
    d9 = lines[2].split(",")
    assert float(d9[1]) == pytest.approx(44.64, abs=0.01)
    assert float(d9[2]) == pytest.approx(29.76, abs=0.01)

    code, out, _ = run("analytic", "--d", "5", "--t", "1s", "--cycle-time", "2ms")
    assert code == 0 and "feasible rounds: 500" in out


def test_analytic_comparison_against_sweep_file(tmp_path):
    sweep_out = tmp_path / "sw.csv"
    code, _, _ = run(
        "sweep", "--d", "3", "--rounds", "2:6:2", "--shots", "400",
        "--seed", "1", "--out", str(sweep_out),
    )
    assert code == 0
    cmp_out = tmp_path / "cmp.csv"
    code, _, _ = run("analytic", "--sweep", str(sweep_out), "--out", str(cmp_out))
    assert code == 0
    lines = cmp_out.read_text().strip().splitlines()
    assert lines[0] == (
        "d,n_star_x,n_star_z,n_star_combined,empirical_argmin,"
        "empirical_lo,empirical_hi"
    )
    row = lines[1].split(",")
    assert row[0] == "3"
    lo, hi = int(row[5]), int(row[6])
    assert 2 <= lo <= int(row[4]) <= hi <= 6
