import io
import json

import pytest

from ps3lab.cli import main, parse_range, InputError
from ps3lab.pantsgeom import associate_pants
from ps3lab.ratfun import fixture

from conftest import MATCHED_B1


def run(*argv):
    out, err = io.StringIO(), io.StringIO()
    code = main([str(a) for a in argv], stdout=out, stderr=err)
    return code, out.getvalue(), err.getvalue()


@pytest.fixture
def files(tmp_path):
    paths = {}
    for case in ("A", "B1"):
        p = tmp_path / f"R_{case}.json"
        p.write_text(json.dumps(fixture(case).to_json()))
        paths[case] = p
    paths["pants"] = tmp_path / "pants.json"
    paths["pants"].write_text(json.dumps(associate_pants(fixture("B1")).to_json()))
    paths["deg"] = tmp_path / "deg.json"
    paths["deg"].write_text(json.dumps({"num": [0, 0, 0, 1], "den": [1]}))
    paths["bad"] = tmp_path / "bad.json"
    paths["bad"].write_text("{not json")
    paths["spec"] = tmp_path / "spec.json"
    paths["spec"].write_text(json.dumps(MATCHED_B1[1].to_json()))
    return paths


def test_parse_range():
    assert parse_range("1..3") == [1, 2, 3]
    assert parse_range("2") == [2]
    assert parse_range("3..1") == []
    with pytest.raises(InputError):
        parse_range("a..b")


def test_classify(files):
    code, out, _ = run("classify", files["A"])
    assert code == 0 and json.loads(out)["case"] == "A"
    assert run("classify", files["deg"])[0] == 2
    assert run("classify", files["bad"])[0] == 1
    assert run("classify", files["A"].parent / "missing.json")[0] == 1
    assert run("nonsense")[0] == 1


def test_spectrum(files, tmp_path):
    out = tmp_path / "s.csv"
    assert run("spectrum", files["B1"], "--n", 64, "--out", out)[0] == 0
    lines = out.read_text().splitlines()
    assert lines[0] == "lambda,residual,zero_count"
    lam, res, zc = lines[1].split(",")
    assert abs(float(lam) - 1.038295351553605) < 1e-9 and zc == "0"
    side = json.loads((tmp_path / "s.csv.json").read_text())
    assert side["N"] == 64 and len(side["coefficients"][0]) == 64 and side["seed"] == 0


def test_moduli_deterministic(files):
    a = run("moduli", files["pants"])
    b = run("moduli", files["pants"])
    assert a[0] == 0 and a[1] == b[1]
    assert json.loads(a[1])["labels"] == ["red", "green", "blue"]


def test_membrane_svg(tmp_path):
    svg = tmp_path / "d.svg"
    code, out, _ = run("membrane", "--fashion", "PB21", "--svg", svg)
    assert code == 0 and svg.read_text().startswith("<svg")
    assert json.loads(out)["spec"]["fashion"] == "PB21"
    assert run("membrane", "--fashion", "PB1", "--lambda", 2.5, "--h1", 3, "--h2", 4)[0] == 1
    assert run("membrane", "--fashion", "XX")[0] == 1


def test_empty_pipeline(files):
    code, out, _ = run("pipeline", files["B1"], "--fashion", "PB1", "--m", "2..1")
    assert code == 0
    assert out.splitlines() == ["fashion,m1,m2,lambda_matched,lambda_direct,rel_error,"
                                "zero_count,residual,status"]


def test_pipeline_wrong_fashion(files):
    assert run("pipeline", files["B1"], "--fashion", "PA2", "--m", "1")[0] == 1


@pytest.mark.slow
def test_reconstruct_and_verify(files, tmp_path):
    csv_path, svg = tmp_path / "u.csv", tmp_path / "u.svg"
    code, _, err = run("reconstruct", files["B1"], "--spec", files["spec"], "--out", csv_path,
                       "--svg", svg)
    assert code == 0, err
    assert csv_path.read_text().startswith("x,u\n") and "<polyline" in svg.read_text()
    code, out, _ = run("verify", files["B1"], "--lambda", MATCHED_B1[1].lam, "--u", csv_path)
    rep = json.loads(out)
    assert code == 0 and rep["residual"] < 1e-3 and rep["zero_count"] == 0 and "seed" in rep


@pytest.mark.slow
def test_match_json(files):
    code, out, _ = run("match", "--fashion", "PB1", "--m", 1, "--pants", files["pants"])
    assert code == 0
    res = json.loads(out)
    assert {"lambda", "h1", "h2", "residual", "iterations", "seed"} <= set(res)
    assert abs(res["lambda"] - MATCHED_B1[1].lam) < 1e-6
