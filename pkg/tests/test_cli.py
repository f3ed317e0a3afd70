import json
import math
from importlib import resources

import jsonschema
import numpy as np
import pytest

from conecalc.cli import main, run_scenario
from conecalc.spaces import GridFunction, LogRadialGrid


@pytest.fixture(scope="module")
def schema():
    ref = resources.files("conecalc").joinpath("schemas", "report.schema.json")
    return json.loads(ref.read_text(encoding="utf-8"))


def run_cli(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr().out
    return code, (json.loads(out) if out.strip() else None)


def check(schema, doc):
    jsonschema.validate(doc, schema)


def test_alpha_star_golden(tmp_path, capsys, schema):
    out = tmp_path / "a.json"
    code, doc = run_cli(capsys, "alpha-star", "--n", "4", "--p", "2", "--q", "4",
                        "--output", str(out))
    assert code == 0
    assert doc["alpha_star"] == 2.5
    file_doc = json.loads(out.read_text())
    assert file_doc == doc
    check(schema, doc)


def test_alpha_star_validation_exit(capsys):
    code, _ = run_cli(capsys, "alpha-star", "--n", "4", "--p", "0.5", "--q", "4")
    assert code == 2


def test_unknown_subcommand(capsys):
    assert main(["frobnicate"]) == 2


def test_extension_golden(capsys, schema):
    code, doc = run_cli(capsys, "extension", "--preset", "cone2d",
                        "--gamma", "0.5", "--p", "2")
    assert code == 0
    assert doc["dim_E"] == 4
    assert len(doc["basis"]) == 4
    terms = sorted((t["exponent"]["re"], t["log_power"], t["mode"])
                   for t in doc["basis"])
    assert terms == [(0.0, 0, 0), (0.0, 1, 0), (1.0, 0, -1), (1.0, 0, 1)]
    check(schema, doc)


def test_analyze_report(capsys, schema):
    code, doc = run_cli(capsys, "analyze", "--preset", "cone2d",
                        "--gamma", "0.5")
    assert code == 0
    assert doc["conormal_line"]["invertible"] is True
    assert doc["elliptic"] is True
    assert doc["min_domain"]["tag"] == "EXACT"
    check(schema, doc)


def test_feasible_reports(capsys, schema):
    code, doc = run_cli(capsys, "feasible", "--n", "4", "--c", "1",
                        "--alpha", "3")
    assert code == 0 and doc["feasible"] is True and doc["witness"]
    check(schema, doc)
    code, doc = run_cli(capsys, "feasible", "--n", "3", "--c", "1",
                        "--alpha", "1")
    assert code == 0 and doc["feasible"] is False and doc["witness"] is None
    check(schema, doc)


def test_norm_from_csv(tmp_path, capsys, schema):
    grid = LogRadialGrid.make(512, 16.0, max_mode=0)
    u = GridFunction.from_radial_profile(grid, grid.t)
    csv = tmp_path / "u.csv"
    u.to_csv(csv)
    code, doc = run_cli(capsys, "norm", "--input", str(csv),
                        "--s", "0", "--gamma", "0", "--p", "2")
    assert code == 0
    assert doc["value"] == pytest.approx(math.sqrt(math.pi / 2), abs=1e-3)
    check(schema, doc)


def test_norm_divergent_reported_as_inf(tmp_path, capsys, schema):
    grid = LogRadialGrid.make(128, 16.0, max_mode=0)
    u = GridFunction.from_radial_profile(grid, np.ones(128))
    csv = tmp_path / "flat.csv"
    u.to_csv(csv)
    code, doc = run_cli(capsys, "norm", "--input", str(csv),
                        "--s", "0", "--gamma", "1", "--p", "2")
    assert code == 0
    assert doc["value"] == "inf"
    check(schema, doc)


def test_resolvent_scan_deterministic(tmp_path, capsys, schema):
    args = ["resolvent-scan", "--nodes", "96", "--max-mode", "1",
            "--magnitudes", "10,100"]
    out1, out2 = tmp_path / "r1.json", tmp_path / "r2.json"
    assert main(args + ["--output", str(out1)]) == 0
    assert main(args + ["--output", str(out2)]) == 0
    capsys.readouterr()
    assert out1.read_bytes() == out2.read_bytes()
    doc = json.loads(out1.read_text())
    check(schema, doc)
    assert len(doc["entries"]) == 2


def test_solve_heat_writes_reports(tmp_path, capsys, schema):
    outdir = tmp_path / "heat"
    code, pointer = run_cli(capsys, "solve-heat", "--nodes", "96",
                            "--max-mode", "1", "--steps", "16",
                            "--u0", "bessel", "--outdir", str(outdir))
    assert code == 0
    check(schema, pointer)
    report = json.loads((outdir / "report.json").read_text())
    check(schema, report)
    assert report["mr"] is not None
    assert report["mr"]["initial_norm"] == "SURROGATE"
    csv_lines = (outdir / "trajectory.csv").read_text().strip().splitlines()
    assert csv_lines[0] == "time,s,t,mode,re,im"


def test_solve_quasilinear_gl(tmp_path, capsys, schema):
    outdir = tmp_path / "gl"
    code, _ = run_cli(capsys, "solve-quasilinear", "--nodes", "96",
                      "--max-mode", "2", "--steps", "16",
                      "--u0", "bump-cos", "--u0-scale", "0.8",
                      "--nonlinearity", "gl", "--outdir", str(outdir))
    assert code == 0
    report = json.loads((outdir / "report.json").read_text())
    check(schema, report)
    assert report["mr"] is None


def test_scenario_ginzburg_landau(tmp_path, schema):
    code, doc = run_scenario("ginzburg_landau", outdir=str(tmp_path / "out"))
    assert code == 0
    assert doc["refused"] is False
    written = json.loads((tmp_path / "out" / "scenario_report.json").read_text())
    check(schema, written)
    assert written["solve"]["final_norm"] >= 0.0


def test_scenario_refusal_without_force(tmp_path, schema):
    code, doc = run_scenario("infeasible_n3", outdir=str(tmp_path / "out"))
    assert code == 2
    assert doc["refused"] is True and doc["solve"] is None
    written = json.loads((tmp_path / "out" / "scenario_report.json").read_text())
    check(schema, written)


def test_scenario_force_override(tmp_path, schema):
    code, doc = run_scenario("infeasible_n3", force=True,
                             outdir=str(tmp_path / "out"))
    assert code == 0
    assert doc["refused"] is False and doc["solve"] is not None


def test_scenario_quasilinear_n4(tmp_path, schema):
    code, doc = run_scenario("quasilinear_n4", outdir=str(tmp_path / "out"))
    assert code == 0
    assert doc["feasibility"]["feasible"] is True
    assert doc["feasibility"]["witness"] is not None
    assert doc["solve"] is not None
    check(schema, json.loads((tmp_path / "out" / "scenario_report.json").read_text()))


def test_scenario_schema_pointer(tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({"name": "x", "solve": {"kind": "heat",
                                                      "nodes": 64}}))
    code, _ = run_cli(capsys, "scenario", str(bad))
    assert code == 2


def test_scenario_missing_file(capsys):
    code, _ = run_cli(capsys, "scenario", "no-such-scenario")
    assert code == 2


def test_cli_determinism_across_reports(tmp_path, capsys):
    for args in (["alpha-star", "--n", "4", "--p", "2.2", "--q", "7"],
                 ["extension", "--preset", "cone2d", "--gamma", "0.3",
                  "--p", "3"],
                 ["feasible", "--n", "4", "--c", "1", "--alpha", "2"]):
        a, b = tmp_path / "a.json", tmp_path / "b.json"
        assert main(args + ["--output", str(a)]) == 0
        assert main(args + ["--output", str(b)]) == 0
        capsys.readouterr()
        assert a.read_bytes() == b.read_bytes()


def test_command_request_dispatch(tmp_path, capsys):
    from conecalc.cli import CommandRequest, run
    from conecalc.errors import DomainError as DE

    out = tmp_path / "req.json"
    request = CommandRequest("alpha-star", {"n": 4, "p": 2, "q": 4},
                             output=str(out))
    assert run(request) == 0
    capsys.readouterr()
    assert json.loads(out.read_text())["alpha_star"] == 2.5
    with pytest.raises(DE):
        CommandRequest("not-a-command")


def test_scenario_heat_kind(tmp_path, schema):
    scenario = {
        "name": "heat-smoke",
        "solve": {
            "kind": "heat",
            "nodes": 96,
            "max_mode": 2,
            "horizon": 0.2,
            "steps": 20,
            "p": 2.0,
            "u0": {"preset": "zero"},
            "forcing": {"preset": "bump"},
            "save_every": 5,
        },
        "reports": {"mr": True, "tip_asymptotics": True},
    }
    path = tmp_path / "heat.json"
    path.write_text(json.dumps(scenario))
    code, doc = run_scenario(str(path), outdir=str(tmp_path / "out"))
    assert code == 0
    assert doc["feasibility"] is None
    assert doc["solve"]["mr"]["ratio"] is not None
    check(schema, json.loads((tmp_path / "out" / "scenario_report.json").read_text()))


def test_solve_heat_with_forcing(tmp_path, capsys, schema):
    outdir = tmp_path / "forced"
    code, _ = run_cli(capsys, "solve-heat", "--nodes", "96", "--max-mode", "1",
                      "--steps", "16", "--u0", "zero", "--forcing", "bump",
                      "--outdir", str(outdir))
    assert code == 0
    report = json.loads((outdir / "report.json").read_text())
    check(schema, report)
    assert report["mr"]["ratio"] is not None
    assert report["final_norm"] > 0
