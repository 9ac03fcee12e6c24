import io
import json

import pytest

from symmflow.cli import run


def call(*argv):
    out, err = io.StringIO(), io.StringIO()
    code = run(list(argv), out, err)
    return code, out.getvalue(), err.getvalue()


def report(*argv):
    code, out, err = call(*argv)
    assert code == 0, err
    return json.loads(out)["result"]


@pytest.fixture
def problem_file(tmp_path):
    def make(data):
        p = tmp_path / f"{data.get('name', 'p')}.json"
        p.write_text(json.dumps(data))
        return str(p)
    return make


def test_symmetries_bundled():
    r = report("symmetries", "boussinesq_unperturbed")
    assert r["dimension"] == 8
    assert all(v is not None for v in r["reference_membership"].values())


def test_empty_ansatz(problem_file):
    path = problem_file({"ode": {"order": 2, "f0": "-y"}, "ansatz": {"x_basis": []}})
    assert report("symmetries", path)["dimension"] == 0


def test_parse_error_reports_position(problem_file):
    path = problem_file({"ode": {"order": 2, "f0": "-y +* 2"}})
    code, _, err = call("symmetries", path)
    assert code == 2 and "ode.f0" in err and "position 4" in err


def test_outside_fragment_is_a_parse_error(problem_file):
    path = problem_file({"ode": {"order": 2, "f0": "1/y"}})
    assert call("symmetries", path)[0] == 2


def test_bad_configuration(problem_file, tmp_path):
    assert call("symmetries", str(tmp_path / "missing.json"))[0] == 4
    assert call("symmetries", problem_file({"ode": {"f0": "y"}}))[0] == 4
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    assert call("symmetries", str(bad))[0] == 4


def test_approx_report():
    r = report("approx", "boussinesq")
    assert sorted(r["constraints"]) == ["C1", "C2", "C3", "C4", "C8"]
    assert r["stability"]["stable"] == ["X5", "X6", "X7"]
    assert r["stability"]["unstable"] == ["X1", "X2", "X3", "X4", "X8"]
    assert r["trivial_count"] == 8
    assert [g["name"] for g in r["nontrivial"]] == ["X9", "X10", "X11"]


def test_approx_unperturbed_all_stable():
    r = report("approx", "boussinesq_unperturbed")
    assert len(r["stability"]["stable"]) == 8 and not r["constraints"]


def test_approx_reduced_ansatz(problem_file):
    path = problem_file({"ode": {"order": 2, "f0": "-y", "f1": "x + 1 + y^2"},
                         "ansatz": {"x_basis": ["1", "x", "sin(x)", "cos(x)"]}})
    r = report("approx", path)
    assert len(r["exact_basis"]) == 6
    assert set(r["stability"]["stable"]) | set(r["stability"]["unstable"]) == {f"X{i}" for i in range(1, 7)}


def test_counterparts():
    r = report("counterpart", "boussinesq", "X8")
    assert r["counterpart"]["zeta0"] == "y" and not r["stable"]
    r = report("counterpart", "boussinesq", "X5")
    assert r["stable"] and r["equivalent_to_point_completion"]
    assert call("counterpart", "boussinesq", "X99")[0] == 4


def test_intfactor_flags():
    r = report("intfactor", "bbm", "--check", "(1+eps)*y'", "--first-integral", "--solve")
    assert r["factor"]["residuals"] == ["0"] * 4
    assert r["first_integral"]["lambda"] == "2"
    assert r["first_integral"]["psi0"] == "y^2 + y'^2"
    assert len(r["factor_basis"]) == 2


def test_intfactor_nonzero_residual(problem_file):
    path = problem_file({"ode": {"order": 2, "f0": "-y"}})
    r = report("intfactor", path, "--check", "y")
    assert not r["factor"]["is_factor"] and r["factor"]["residuals"][0] == "2"
    assert call("intfactor", path)[0] == 4


def test_solve_commands():
    r = report("solve", "boussinesq")
    assert r["matches_reference"]
    assert r["solution"]["y1"] == "2 + x - 1/3*sin(2*x)"
    assert report("solve", "bbm")["matches_reference"]
    r = report("solve", "bbm_quarter")
    assert all(v["order0"] < 1e-9 and v["order1"] < 1e-9 for v in r["residuals"].values())


def test_solve_ic_count(problem_file):
    path = problem_file({"ode": {"order": 2, "f0": "-y"}, "ics": [[0, "1"]]})
    assert call("solve", path)[0] == 4


def test_solve_unsupported_operator(problem_file):
    path = problem_file({"ode": {"order": 2, "f0": "y"}, "ics": [[0, "1"], [1, "0"]]})
    assert call("solve", path)[0] == 3


def test_validate_writes_csv(tmp_path):
    r = report("validate", "boussinesq", "--out", str(tmp_path))
    assert r["csv_files"] == ["boussinesq_eps_0.02.csv", "boussinesq_eps_0.06.csv", "boussinesq_eps_0.1.csv"]
    for name in r["csv_files"]:
        text = (tmp_path / name).read_bytes().decode()
        assert text.startswith("x,approx,numeric,abs_error\n") and text.count("\n") == 1002
    assert (tmp_path / "boussinesq_validate.json").exists()
    assert 1.7 <= r["scaling"]["exponent"] <= 2.3


def test_validate_bbm():
    r = report("validate", "bbm")
    assert len(r["comparisons"]) == 2
    assert r["scaling"]["eps"] == [0.01, 0.05]


def test_validate_empty_eps():
    assert call("validate", "boussinesq", "--eps", "")[0] == 4
    assert call("validate", "boussinesq", "--eps", "a,b")[0] == 4
    assert call("validate", "boussinesq", "--grid", "1:0:0.1")[0] == 4


def test_reports_are_deterministic(monkeypatch):
    monkeypatch.setenv("SYMMFLOW_THREADS", "1")
    a = call("validate", "boussinesq")[1]
    monkeypatch.setenv("SYMMFLOW_THREADS", "4")
    b = call("validate", "boussinesq")[1]
    c = call("validate", "boussinesq")[1]
    assert a == b == c
    assert call("approx", "boussinesq")[1] == call("approx", "boussinesq")[1]


def test_report_envelope():
    data = json.loads(call("symmetries", "boussinesq_unperturbed")[1])
    assert set(data) == {"command", "problem", "input_sha256", "engine_version", "result", "audit"}
    assert data["audit"]["passed"] and len(data["input_sha256"]) == 64
