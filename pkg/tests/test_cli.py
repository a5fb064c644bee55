import io
import json
from importlib import resources

import jsonschema
import pytest

from lew.cli import run

SCHEMA = json.loads(resources.files("lew").joinpath("schema/report.schema.json").read_text())


def call(argv):
    out, err = io.StringIO(), io.StringIO()
    code = run(argv, stdout=out, stderr=err)
    return code, out.getvalue(), err.getvalue()


def report(argv, expect=0):
    code, out, err = call(argv + ["--no-timestamp"])
    assert code == expect, err
    doc = json.loads(out)
    jsonschema.validate(doc, SCHEMA)
    return doc


def test_identities_suite_passes():
    doc = report(["verify", "identities", "--suite", "all", "--seed", "7"])
    assert doc["passed"] and all(c["passed"] for c in doc["result"]["cases"])
    assert doc["config"]["seed"] == 7


@pytest.mark.parametrize("argv", [["verify", "fomin", "--bogus"], ["density", "nope"], [],
                                  ["kernel", "strip"], ["verify", "fomin", "--sources", "1,0"],
                                  ["verify", "identities", "--suite", "nope"],
                                  ["kernel", "annulus", "--params", "r=2", "--at", "0,0"],
                                  ["verify", "fomin", "--preset", "uniform-strip", "--samples", "10"],
                                  ["verify", "affine", "--preset", "uniform-grid", "--samples", "10"]])
def test_usage_errors_exit_2(argv):
    code, out, err = call(argv)
    assert code == 2 and out == "" and err


def test_fomin_report_and_determinism():
    argv = ["verify", "fomin", "--n", "2", "--samples", "20000", "--seed", "3"]
    a = call(argv + ["--no-timestamp"])[1]
    b = call(argv + ["--no-timestamp"])[1]
    assert a == b
    doc = json.loads(a)
    jsonschema.validate(doc, SCHEMA)
    assert doc["result"]["z_report"]["passed"] == doc["passed"]
    assert doc["config"]["args"]["mc"]["samples"] == 20000
    assert "timestamp" in json.loads(call(argv)[1])


def test_affine_report_has_route_check():
    code, out, _ = call(["verify", "affine", "--n", "3", "--samples", "5000", "--seed", "1",
                         "--no-timestamp"])
    doc = json.loads(out)
    jsonschema.validate(doc, SCHEMA)
    assert doc["result"]["cyclic_route"]["passed"]
    assert code == (0 if doc["passed"] else 1)


def test_explicit_endpoints_and_graph_spec(tmp_path):
    spec = tmp_path / "g.json"
    spec.write_text(json.dumps({"kind": "finite", "M": 4, "N": 3}))
    doc = report(["verify", "fomin", "--graph", str(spec), "--sources", "3,0;0,0",
                  "--targets", "3,3;0,3", "--samples", "5000"], )
    assert doc["result"]["determinant"]["sources"] == [[3, 0], [0, 0]]


def test_density_writes_csv(tmp_path):
    csv_path = tmp_path / "grid.csv"
    out = tmp_path / "rep.json"
    code, _, _ = call(["density", "goe", "--n", "2", "--spreads", "0.2,0.1", "--grid-size", "5",
                       "--csv", str(csv_path), "--out", str(out), "--no-timestamp"])
    assert code == 0
    jsonschema.validate(json.loads(out.read_text()), SCHEMA)
    lines = csv_path.read_text().splitlines()
    assert lines[0] == "spread,y1,y2,raw,normalized,target"
    assert len(lines) == 1 + 2 * 5
    # 17 significant digits round-trip exactly
    for tok in lines[1].split(","):
        assert float(repr(float(tok))) == float(tok)


def test_coe_density_command():
    doc = report(["density", "coe-circle", "--n", "2", "--params", "t=30", "--grid-size", "6"])
    assert doc["result"]["sup_rel_error"] < 1e-6


def test_kernel_point_and_grid(tmp_path):
    doc = report(["kernel", "strip", "--params", "t=1", "--at", "0.2,0.5"])
    from lew.kernels import strip_kernel
    assert doc["result"]["value"] == strip_kernel(1.0, 0.2, 0.5)
    csv_path = tmp_path / "k.csv"
    doc = report(["kernel", "circle", "--params", "t=0.5,x=0.5", "--grid=-1:1:3,0:1:2",
                  "--csv", str(csv_path)])
    assert doc["result"]["points"] == 6
    assert csv_path.read_text().splitlines()[0] == "x,y,value"
