"""Command-line interface: artifacts, exit codes, routing, determinism."""

import json
import os

import numpy as np
import pytest

from lowform.cli import main

def run(argv):
    return main([str(a) for a in argv])


def read(path):
    with open(path) as fh:
        return json.load(fh)


@pytest.fixture()
def sparse_instance(tmp_path):
    out = tmp_path / "gen"
    assert run(["gen", "--seed", 7, "--n", 5, "--m", 2, "--degree", 3, "--out", out]) == 0
    return out / "h.json"


def test_gen_is_deterministic(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    assert run(["gen", "--seed", 3, "--n", 4, "--m", 1, "--out", a]) == 0
    assert run(["gen", "--seed", 3, "--n", 4, "--m", 1, "--out", b]) == 0
    assert (a / "h.json").read_bytes() == (b / "h.json").read_bytes()
    assert (a / "truth.json").read_bytes() == (b / "truth.json").read_bytes()
    c = tmp_path / "c"
    assert run(["gen", "--seed", 4, "--n", 4, "--m", 1, "--out", c]) == 0
    assert (a / "h.json").read_bytes() != (c / "h.json").read_bytes()


def test_gen_dense_control(tmp_path):
    out = tmp_path / "dense"
    assert run(["gen", "--seed", 5, "--n", 3, "--m", 3, "--out", out]) == 0
    truth = read(out / "truth.json")
    assert truth["m"] == 3 and np.asarray(truth["ell0"]).shape == (3, 3)


def test_detect_and_extract_roundtrip(tmp_path, sparse_instance):
    det = tmp_path / "det"
    assert run(["detect", "--input", sparse_instance, "--out", det]) == 0
    report = read(det / "report.json")
    assert report["m"] == 2 and report["method"] == "exact"
    manifest = read(det / "manifest.json")
    assert manifest["command"] == "detect"
    assert "h.json" in manifest["inputs"] and manifest["version"]

    ext = tmp_path / "ext"
    assert run(
        ["extract", "--input", sparse_instance, "--report", det / "report.json", "--out", ext]
    ) == 0
    extraction = read(ext / "report.json")
    assert extraction["residual"] < 1e-8
    assert np.asarray(extraction["ell"]).shape == (5, 2)


def test_detect_randomized_flag(tmp_path, sparse_instance):
    det = tmp_path / "det"
    assert run(
        ["detect", "--input", sparse_instance, "--method", "randomized", "--out", det]
    ) == 0
    report = read(det / "report.json")
    assert report["m"] == 2 and report["method"] == "randomized"
    assert report["samples_used"] == len(report["spectrum"])


def test_reduce_sphere_command(tmp_path, sparse_instance):
    det, ext, red = tmp_path / "det", tmp_path / "ext", tmp_path / "red"
    run(["detect", "--input", sparse_instance, "--out", det])
    run(["extract", "--input", sparse_instance, "--report", det / "report.json", "--out", ext])
    assert run(["reduce-sphere", "--sparse", ext / "report.json", "--out", red]) == 0
    reduced = read(red / "report.json")
    assert np.allclose(np.asarray(reduced["L"]), np.eye(2), atol=1e-8)


def test_reduce_polytope_presets(tmp_path, sparse_instance):
    det, ext = tmp_path / "det", tmp_path / "ext"
    run(["detect", "--input", sparse_instance, "--out", det])
    run(["extract", "--input", sparse_instance, "--report", det / "report.json", "--out", ext])
    simplex = tmp_path / "simplex"
    assert run(
        ["reduce-polytope", "--sparse", ext / "report.json", "--preset", "simplex", "--out", simplex]
    ) == 0
    box = tmp_path / "box"
    assert run(
        ["reduce-polytope", "--sparse", ext / "report.json", "--preset", "box", "--out", box]
    ) == 0
    assert read(simplex / "report.json")["converged"]
    assert read(box / "report.json")["converged"]


def test_reduce_polytope_general_and_infeasible(tmp_path, sparse_instance):
    det, ext = tmp_path / "det", tmp_path / "ext"
    run(["detect", "--input", sparse_instance, "--out", det])
    run(["extract", "--input", sparse_instance, "--report", det / "report.json", "--out", ext])
    a_path, b_path = tmp_path / "A.json", tmp_path / "b.json"
    a_path.write_text(json.dumps([[1.0] * 5]))
    b_path.write_text(json.dumps([1.0]))
    gen = tmp_path / "general"
    assert run(
        ["reduce-polytope", "--sparse", ext / "report.json",
         "--A", a_path, "--b", b_path, "--out", gen]
    ) == 0
    assert read(gen / "report.json")["converged"]

    b_path.write_text(json.dumps([-1.0]))
    assert run(
        ["reduce-polytope", "--sparse", ext / "report.json",
         "--A", a_path, "--b", b_path, "--out", tmp_path / "bad"]
    ) == 3


def test_solve_command_and_nonconvergence_exit(tmp_path):
    obj = tmp_path / "p.json"
    obj.write_text(json.dumps({"num_vars": 1, "terms": [{"exp": [1], "coef": 1.0}]}))
    out = tmp_path / "solve"
    assert run(["solve", "--objective", obj, "--domain", "ball", "--out", out]) == 0
    assert read(out / "report.json")["value"] == pytest.approx(-1.0, abs=1e-9)

    # a quartic cannot reach gradient tolerance in one iteration: exit 4,
    # but the partial report is still written
    hard = tmp_path / "q.json"
    hard.write_text(json.dumps({"num_vars": 2, "terms": [
        {"exp": [4, 0], "coef": 1.0}, {"exp": [0, 3], "coef": -2.0},
        {"exp": [1, 1], "coef": 0.7}]}))
    out4 = tmp_path / "solve4"
    code = run(["solve", "--objective", hard, "--domain", "sphere",
                "--max-iter", 1, "--starts", 1, "--out", out4])
    assert code == 4
    assert (out4 / "report.json").exists() and (out4 / "manifest.json").exists()


def test_solve_hrep_domain(tmp_path):
    obj = tmp_path / "p.json"
    obj.write_text(json.dumps({"num_vars": 2, "terms": [
        {"exp": [1, 0], "coef": 1.0}, {"exp": [0, 1], "coef": 1.0}]}))
    region = tmp_path / "region.json"
    region.write_text(json.dumps({
        "a_ub": [[1.0, 1.0]], "b_ub": [1.0], "lo": [0.0, 0.0], "hi": [1.0, 1.0]}))
    out = tmp_path / "solve"
    assert run(["solve", "--objective", obj, "--domain", region, "--out", out]) == 0
    assert read(out / "report.json")["value"] == pytest.approx(0.0, abs=1e-9)


def test_approx_command(tmp_path):
    gen = tmp_path / "gen"
    run(["gen", "--seed", 11, "--n", 4, "--m", 2, "--degree", 3,
         "--epsilon", 0.05, "--out", gen])
    out = tmp_path / "approx"
    assert run(["approx", "--input", gen / "h.json", "--m", 2,
                "--l2-samples", 20000, "--out", out]) == 0
    report = read(out / "report.json")
    assert report["m"] == 2 and report["path"] == "exact"
    assert abs(report["rho_plus"] - report["rho_minus"]) < 1e-8
    assert report["l2_error"]["value"] > 0

    cub = tmp_path / "cub"
    assert run(["approx", "--input", gen / "h.json", "--m", 2, "--path", "cubature",
                "--l2-samples", 20000, "--out", cub]) == 0
    exact_f = {tuple(t["exp"]): t["coef"] for t in report["fhat"]["terms"]}
    cub_f = {tuple(t["exp"]): t["coef"]
             for t in read(cub / "report.json")["fhat"]["terms"]}
    assert all(abs(exact_f.get(k, 0) - cub_f.get(k, 0)) < 1e-8
               for k in set(exact_f) | set(cub_f))


def test_pipeline_routes(tmp_path, sparse_instance):
    exact = tmp_path / "exact"
    assert run(["pipeline", "--input", sparse_instance, "--domain", "sphere",
                "--out", exact]) == 0
    r = read(exact / "report.json")
    assert r["route"] == "exact/sphere"
    assert abs(r["h_at_x_star"] - r["rho"]) < 1e-8

    gen = tmp_path / "pert"
    run(["gen", "--seed", 13, "--n", 4, "--m", 2, "--degree", 3,
         "--epsilon", 0.1, "--out", gen])
    approx = tmp_path / "approx"
    assert run(["pipeline", "--input", gen / "h.json", "--domain", "sphere",
                "--l2-samples", 20000, "--out", approx]) == 0
    r = read(approx / "report.json")
    assert r["route"] == "approx"
    assert "rho_plus" in r and "l2_error" in r

    simplex = tmp_path / "simplex"
    assert run(["pipeline", "--input", sparse_instance, "--domain", "simplex",
                "--out", simplex]) == 0
    assert read(simplex / "report.json")["route"] == "exact/simplex"

    box = tmp_path / "box"
    assert run(["pipeline", "--input", sparse_instance, "--domain", "box",
                "--out", box]) == 0
    assert read(box / "report.json")["route"] == "exact/box"

    a_path, b_path = tmp_path / "A.json", tmp_path / "b.json"
    a_path.write_text(json.dumps([[1.0] * 5]))
    b_path.write_text(json.dumps([1.0]))
    poly = tmp_path / "poly"
    assert run(["pipeline", "--input", sparse_instance, "--domain", "polytope",
                "--A", a_path, "--b", b_path, "--out", poly]) == 0
    r = read(poly / "report.json")
    assert r["route"] == "exact/polytope" and r["converged"]


def test_malformed_input_exits_2(tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text("{ not json")
    assert run(["detect", "--input", bad, "--out", tmp_path / "o"]) == 2
    missing = tmp_path / "missing.json"
    assert run(["detect", "--input", missing, "--out", tmp_path / "o"]) == 2
    schema = tmp_path / "schema.json"
    schema.write_text(json.dumps({"num_vars": 2, "terms": [{"exp": [1], "coef": 1.0}]}))
    assert run(["detect", "--input", schema, "--out", tmp_path / "o"]) == 2


def test_reports_are_deterministic(tmp_path, sparse_instance):
    a, b = tmp_path / "ra", tmp_path / "rb"
    run(["pipeline", "--input", sparse_instance, "--domain", "sphere", "--out", a])
    run(["pipeline", "--input", sparse_instance, "--domain", "sphere", "--out", b])
    assert (a / "report.json").read_bytes() == (b / "report.json").read_bytes()


GOLDEN_DIR = os.path.join(os.path.dirname(__file__), "golden")


@pytest.mark.parametrize("case", ["case_sphere", "case_approx", "case_simplex"])
def test_golden_reports(tmp_path, case):
    case_dir = os.path.join(GOLDEN_DIR, case)
    with open(os.path.join(case_dir, "args.json")) as fh:
        spec = json.load(fh)
    gen_out = tmp_path / "gen"
    assert run(spec["gen"] + ["--out", gen_out]) == 0
    with open(os.path.join(case_dir, "h.json"), "rb") as fh:
        assert fh.read() == (gen_out / "h.json").read_bytes()
    run_out = tmp_path / "run"
    argv = [a if a != "__H__" else str(gen_out / "h.json") for a in spec["cmd"]]
    assert run(argv + ["--out", run_out]) == spec["exit"]
    with open(os.path.join(case_dir, "report.json"), "rb") as fh:
        assert fh.read() == (run_out / "report.json").read_bytes()
