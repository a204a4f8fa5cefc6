import csv
import io
import json
import subprocess
import sys

import numpy as np
import pytest

from nepvcond.cli import main
from nepvcond.errors import ProblemFormatError
from nepvcond.experiments import build_bifurcation, build_wilkinson
from nepvcond.io import load_problem, problem_from_dict, problem_to_dict, read_vector, save_problem, write_vector
from nepvcond.model import Constant, Custom, SpmfProblem


@pytest.fixture
def wilk5(tmp_path):
    prob = tmp_path / "w5.json"
    vec = tmp_path / "e1.txt"
    save_problem(build_wilkinson(5), prob, weights="relative")
    write_vector(np.eye(5)[0], vec)
    return str(prob), str(vec)


def run(capsys, *argv):
    code = main(list(argv))
    return code, capsys.readouterr()


def parse_rows(text):
    return {k: v for k, v in (line.split(None, 1) for line in text.splitlines() if line.strip())}


def test_problem_round_trip(tmp_path):
    p = build_bifurcation(-1.0)
    save_problem(p, tmp_path / "p.json")
    q = load_problem(tmp_path / "p.json")
    assert np.array_equal(p.matrices, q.matrices)
    assert np.array_equal(p.functions[1].B, q.functions[1].B)
    assert np.array_equal(p.weights, q.weights)


def test_schema_violations():
    doc = problem_to_dict(build_wilkinson(2), weights="unit")
    bad = dict(doc, m=3)
    with pytest.raises(ProblemFormatError):
        problem_from_dict(bad)
    bad = json.loads(json.dumps(doc))
    bad["terms"][1]["function"] = {"kind": "exponential"}
    with pytest.raises(ProblemFormatError):
        problem_from_dict(bad)
    bad = json.loads(json.dumps(doc))
    bad["terms"][0]["matrix"] = [[1.0, 0.0]]
    with pytest.raises(ProblemFormatError):
        problem_from_dict(bad)
    with pytest.raises(ProblemFormatError):
        problem_to_dict(SpmfProblem([np.eye(2)], [Custom(lambda v: 1.0)]))


def test_read_vector_comments(tmp_path):
    f = tmp_path / "v.txt"
    f.write_text("# header\n1.5\n\n-2e-3  # tail\n")
    assert list(read_vector(f)) == [1.5, -2e-3]
    f.write_text("1.0\nabc\n")
    with pytest.raises(ProblemFormatError):
        read_vector(f)


def test_cond(capsys, wilk5):
    prob, vec = wilk5
    code, out = run(capsys, "cond", "--problem", prob, "--lambda", "5", "--vector", vec)
    assert code == 0
    rows = parse_rows(out.out)
    assert float(rows["kappa_lambda"]) == pytest.approx(67.74169216236812, rel=1e-12)
    code, out = run(capsys, "cond", "--problem", prob, "--lambda", "5", "--vector", vec,
                    "--symmetric", "--norm", "fro", "--absolute", "--json")
    data = json.loads(out.out)
    assert data["mode"] == "absolute"
    assert data["kappa_lambda"] == pytest.approx(5 * 67.74169216236812 * data["beta"], rel=1e-12)


def test_cond_exit_codes(capsys, wilk5, tmp_path):
    prob, vec = wilk5
    assert run(capsys, "cond", "--problem", prob, "--lambda", "4", "--vector", vec)[0] == 2
    assert run(capsys, "cond", "--problem", str(tmp_path / "none.json"), "--lambda", "4", "--vector", vec)[0] == 2
    ident = tmp_path / "ident.json"
    save_problem(SpmfProblem([np.eye(3)], [Constant()]), ident)
    v = tmp_path / "v.txt"
    write_vector([1.0, 0.0, 0.0], v)
    assert run(capsys, "cond", "--problem", str(ident), "--lambda", "1", "--vector", str(v))[0] == 4


def test_backward(capsys, wilk5, tmp_path):
    prob, _ = wilk5
    v = tmp_path / "v.txt"
    write_vector([1.0, 0.01, 0.0, 0.0, 0.0], v)
    code, out = run(capsys, "backward", "--problem", prob, "--vector", str(v), "--rayleigh",
                    "--symmetric", "--norm", "fro")
    assert code == 0
    rows = parse_rows(out.out)
    assert float(rows["eta"]) > 0 and float(rows["gamma"]) >= 1
    assert run(capsys, "backward", "--problem", prob, "--vector", str(v))[0] == 2


def test_solve(capsys, wilk5, tmp_path):
    prob, vec = wilk5
    code, out = run(capsys, "solve", "--problem", prob, "--lambda0", "5.01", "--v0", vec)
    assert code == 0
    rows = parse_rows(out.out.split("\nv\n")[0])
    assert float(rows["lambda"]) == pytest.approx(5.0, abs=1e-12)
    assert float(rows["eta"]) <= 1e-12
    code, out = run(capsys, "solve", "--problem", prob, "--method", "scf", "--v0", "random:3")
    assert code == 0
    code, _ = run(capsys, "solve", "--problem", prob, "--v0", "random:3", "--max-iter", "1", "--lambda0", "50")
    assert code == 3


def test_wilkinson_csv_output(capsys, tmp_path):
    out = tmp_path / "t.csv"
    assert main(["wilkinson", "--n", "2,5", "--out", str(out)]) == 0
    rows = list(csv.DictReader(out.open()))
    assert [r["n"] for r in rows] == ["2", "5"]
    assert float(rows[0]["kappa"]) == pytest.approx(5**0.5)


def test_bifurcation_cli(capsys):
    code, out = run(capsys, "bifurcation", "--steps", "60")
    assert code == 0
    rows = list(csv.DictReader(io.StringIO(out.out)))
    assert rows and set(rows[0]) == {"delta", "lambda", "kappa", "branch", "simple"}
    assert "turning point" in out.err


def test_verify_cli(capsys, wilk5):
    prob, vec = wilk5
    code, out = run(capsys, "verify", "--problem", prob, "--lambda", "5", "--vector", vec, "--samples", "50",
                    "--eps", "1e-6", "--seed", "42", "--class", "symmetric", "--norm", "fro")
    assert code == 0
    assert parse_rows(out.out)["holds"] == "true"
    code, _ = run(capsys, "verify", "--problem", prob, "--lambda", "5", "--vector", vec, "--samples", "0",
                  "--eps", "1e-6", "--seed", "42")
    assert code == 2


def test_module_entry_point():
    res = subprocess.run([sys.executable, "-m", "nepvcond", "wilkinson", "--n", "2"],
                         capture_output=True, text=True, check=True)
    assert res.stdout.splitlines()[0] == "n,kappa,u_dot_v,alpha"
