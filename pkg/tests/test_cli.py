import csv
import json
import subprocess
import sys

import numpy as np
import pytest

from resistar.boundary import build_store
from resistar.classifier import Classifier
from resistar.cli import main
from resistar.enumerate import count_simplices
from resistar.grid import GridSpec
from resistar.oracle import SphereOracle
from resistar.store_io import load_store


def write_json(path, data):
    path.write_text(json.dumps(data))
    return str(path)


@pytest.fixture
def sphere3(tmp_path):
    return write_json(tmp_path / "sphere.json", {"kind": "sphere", "center": [0.5, 0.5, 0.5], "radius": 0.3})


@pytest.fixture
def sphere4(tmp_path):
    return write_json(tmp_path / "sphere4.json", {"kind": "sphere", "center": [0.5] * 4, "radius": 0.3})


def build(tmp_path, oracle, *extra, name="s.rsb"):
    out = str(tmp_path / name)
    assert main(["build", "--oracle", oracle, "--ng", "6", "--out", out, *extra]) == 0
    return out


def test_build_matches_library(tmp_path, sphere3, capsys):
    out = build(tmp_path, sphere3, "--variant", "kuhn", "--q", "7", "--d", "3")
    info = json.loads(capsys.readouterr().out)
    ref = build_store(SphereOracle((0.5, 0.5, 0.5), 0.3), GridSpec(3, 6), "kuhn", 7)
    s = load_store(out)
    assert info["boundary_points"] == ref.n_points == s.n_points
    assert info["q"] == 7 and info["variant"] == "kuhn"
    assert np.array_equal(s.t, ref.t) and np.array_equal(s.v_minus, ref.v_minus)


def test_build_text_layout_and_default_q(tmp_path, sphere3, capsys):
    out = build(tmp_path, sphere3, name="s.txt")
    assert json.loads(capsys.readouterr().out)["q"] == 3
    assert load_store(out).n_points > 0
    assert open(out).read(8).isprintable()


def test_classify_writes_labels(tmp_path, sphere3):
    store = build(tmp_path, sphere3)
    pts = tmp_path / "pts.csv"
    pts.write_text("x1,x2,x3\n0.5,0.5,0.5\n0.05,0.05,0.05\n\n0.5,0.5,0.9\n")
    out = tmp_path / "labels.csv"
    assert main(["classify", "--store", store, "--points", str(pts), "--out", str(out)]) == 0
    rows = list(csv.reader(out.open()))
    assert rows[0] == ["x1", "x2", "x3", "label"]
    assert [r[-1] for r in rows[1:]] == ["-1", "1", "1"]  # the inside of the ball is -1
    cl = Classifier(load_store(store))
    assert [int(r[-1]) for r in rows[1:]] == [cl.classify([float(v) for v in r[:3]]) for r in rows[1:]]


def test_classify_empty_point_file(tmp_path, sphere3):
    store = build(tmp_path, sphere3)
    pts = tmp_path / "pts.csv"
    pts.write_text("x1,x2,x3\n")
    out = tmp_path / "labels.csv"
    assert main(["classify", "--store", store, "--points", str(pts), "--out", str(out)]) == 0
    assert out.read_text() == "x1,x2,x3,label\n"


def test_count_reports_closed_form_and_streamed(tmp_path, sphere3, capsys):
    store = build(tmp_path, sphere3)
    capsys.readouterr()
    assert main(["count", "--store", store, "--streamed"]) == 0
    rec = json.loads(capsys.readouterr().out)
    ref = count_simplices(load_store(store))
    assert rec["simplices"] == rec["simplices_streamed"] == ref.simplices
    assert rec["boundary_points"] == ref.boundary_points


@pytest.mark.parametrize("fmt", ["obj", "json"])
def test_slice_writes_mesh(tmp_path, sphere4, fmt, capsys):
    store = build(tmp_path, sphere4, "--variant", "kuhn")
    capsys.readouterr()
    out = tmp_path / f"mesh.{fmt}"
    assert main(["slice", "--store", store, "--plane", "x4=0.46", "--format", fmt, "--out", str(out)]) == 0
    info = json.loads(capsys.readouterr().out)
    assert info["polygons"] > 0
    text = out.read_text()
    if fmt == "obj":
        assert sum(ln.startswith("f ") for ln in text.splitlines()) == info["polygons"]
    else:
        assert len(json.loads(text)["polygons"]) == info["polygons"]


def test_evaluate_writes_both_csvs(tmp_path, capsys):
    cfg = write_json(
        tmp_path / "cfg.json",
        {
            "grid_sizes": [4, 5, 6],
            "dimensions": [2],
            "generator": {"kind": "random_radial", "n_sites": 3, "sigma": 0.3},
            "samples_per_cube": 5,
        },
    )
    out = tmp_path / "rep.csv"
    assert main(["evaluate", "--config", cfg, "--out", str(out)]) == 0
    assert len(out.read_text().splitlines()) == 1 + 3 * 2
    assert (tmp_path / "rep_slopes.csv").read_text().startswith("d,series,metric")
    first = out.read_bytes()
    assert main(["evaluate", "--config", cfg, "--out", str(out), "--workers", "2"]) == 0
    assert out.read_bytes() == first
    assert main(["evaluate", "--config", cfg, "--out", str(out), "--timing"]) == 0
    assert "wall_time_s" in out.read_text().splitlines()[0]


@pytest.mark.parametrize(
    "argv",
    [
        [],
        ["frobnicate"],
        ["build", "--ng", "5", "--out", "x"],
        ["build", "--oracle", "o.json", "--ng", "five", "--out", "x"],
        ["build", "--oracle", "o.json", "--ng", "5", "--out", "x", "--variant", "simplex"],
        ["slice", "--store", "s", "--plane", "y=0.3", "--out", "m"],
        ["slice", "--store", "s", "--plane", "x0=0.3", "--out", "m"],
        ["count"],
    ],
)
def test_usage_errors_exit_2(argv):
    assert main(argv) == 2


def test_data_errors_exit_3(tmp_path, sphere3, sphere4):
    missing = str(tmp_path / "nope.rsb")
    assert main(["count", "--store", missing]) == 3
    garbage = tmp_path / "bad.rsb"
    garbage.write_bytes(b"not a store")
    assert main(["count", "--store", str(garbage)]) == 3
    bad_oracle = write_json(tmp_path / "o.json", {"kind": "teapot"})
    assert main(["build", "--oracle", bad_oracle, "--ng", "5", "--out", str(tmp_path / "x.rsb")]) == 3
    assert main(["build", "--oracle", sphere3, "--d", "2", "--ng", "5", "--out", str(tmp_path / "x.rsb")]) == 3
    assert main(["build", "--oracle", sphere3, "--ng", "1", "--out", str(tmp_path / "x.rsb")]) == 3

    store = build(tmp_path, sphere3)
    pts = tmp_path / "pts.csv"
    pts.write_text("0.1,0.2\n")
    assert main(["classify", "--store", store, "--points", str(pts), "--out", str(tmp_path / "o.csv")]) == 3
    pts.write_text("0.1,0.2,1.5\n")
    assert main(["classify", "--store", store, "--points", str(pts), "--out", str(tmp_path / "o.csv")]) == 3
    pts.write_text("0.1,0.2,0.3\n0.1,oops,0.3\n")
    assert main(["classify", "--store", store, "--points", str(pts), "--out", str(tmp_path / "o.csv")]) == 3

    # wrong number of planes for the store's dimension
    store4 = build(tmp_path, sphere4, name="s4.rsb")
    assert main(["slice", "--store", store4, "--out", str(tmp_path / "m.obj")]) == 3
    bad_cfg = write_json(tmp_path / "cfg.json", {"grid_sizes": [4], "dimensions": [2], "mystery": 1})
    assert main(["evaluate", "--config", bad_cfg, "--out", str(tmp_path / "r.csv")]) == 3
    good_cfg = write_json(
        tmp_path / "cfg2.json",
        {"grid_sizes": [4, 5, 6], "dimensions": [2], "generator": {"kind": "random_radial", "n_sites": 3, "sigma": 0.3}},
    )
    assert main(["evaluate", "--config", good_cfg, "--out", str(tmp_path / "r.csv"), "--workers", "0"]) == 3


def test_console_entry_point_exit_codes(tmp_path):
    run = lambda *a: subprocess.run([sys.executable, "-m", "resistar.cli", *a], capture_output=True, text=True)
    assert run("--help").returncode == 0
    bad = run("build")
    assert bad.returncode == 2 and "usage" in bad.stderr
    missing = run("count", "--store", str(tmp_path / "none.rsb"))
    assert missing.returncode == 3 and "error" in missing.stderr
    assert "global_error_pct" in run("evaluate", "--help").stdout
