import csv
import io
import json
import math
import subprocess
import sys

import pytest

from glsemigroup import model_from_dict, model_j, model_to_dict
from glsemigroup.cli import run


def call(*argv):
    out = io.StringIO()
    code = run(list(argv), out)
    return code, out.getvalue()


@pytest.fixture
def model_file(tmp_path):
    path = tmp_path / "model-j.json"
    path.write_text(json.dumps(model_to_dict(model_j())))
    return str(path)


def test_inspect_from_file(model_file):
    code, text = call("inspect", "--model", model_file)
    assert code == 0
    info = json.loads(text)
    assert info["theta"] == pytest.approx(0.5, abs=1e-12)
    assert info["flags"]["N_check"] and info["flags"]["N_P"] and info["flags"]["Nbar_inf"]
    assert info["frakb"] == pytest.approx(0.042893, abs=1e-6)


def test_config_echo_round_trips(model_file):
    _, text = call("inspect", "--model", model_file)
    again = model_from_dict(json.loads(text)["config"])
    assert again.quad == model_j().quad


def test_global_flags_before_subcommand():
    code, text = call("--model", "model-c", "inspect")
    assert code == 0 and json.loads(text)["frakb"] == -0.25


def test_phi_command():
    code, text = call("phi", "--tag", "X_laguerre", "--theta", "0.5", "--q", "1")
    assert code == 0 and json.loads(text) == pytest.approx(0.5, rel=1e-15)
    code, text = call("phi", "--tag", "Xbar_selfsimilar", "--theta", "0.5", "--q", "2,8")
    assert json.loads(text) == pytest.approx([2.0, 4.0], rel=1e-14)


def test_moments_command():
    code, text = call("moments", "--kind", "V_psi", "--n", "0")
    assert code == 0 and json.loads(text) == 1.0
    code, text = call("moments", "--kind", "V_psi", "--n", "3", "--series")
    rows = list(csv.reader(io.StringIO(text)))
    assert rows[0] == ["n", "moment"] and len(rows) == 5
    assert float(rows[2][1]) == pytest.approx(2 - math.sqrt(2), rel=1e-14)


def test_wphi_command():
    code, text = call("wphi", "--model", "model-j", "--z", "3")
    res = json.loads(text)
    assert code == 0 and res["wphi"][0] == pytest.approx(2.672414, abs=1e-6)
    code, text = call("wphi", "--z", "0.5+5j")
    assert json.loads(text)["residual"] < 1e-8


def test_density_command():
    code, text = call("density", "--model", "model-c", "--x-min", "1", "--x-max", "2", "--points", "2")
    rows = list(csv.reader(io.StringIO(text)))
    assert rows[0] == ["x", "density", "error_estimate"]
    assert float(rows[1][1]) == pytest.approx(math.exp(-1) / math.sqrt(math.pi), abs=1e-8)


def test_eigen_command():
    code, text = call("eigen", "--n", "1")
    assert json.loads(text)["coefficients"] == pytest.approx([1.0, -1 / (2 - math.sqrt(2))], rel=1e-14)
    code, text = call("eigen", "--n", "0", "--variant", "P_dag")
    res = json.loads(text)
    assert res["coefficients"] == [1.0] and res["x_power"] == pytest.approx(0.5)


def test_apply_command():
    code, text = call("apply", "--coeffs", "0,1", "--t", str(math.log(2)), "--x", "1")
    res = json.loads(text)
    assert res["coefficients"] == pytest.approx([(2 - math.sqrt(2)) / 2, 0.5], rel=1e-13)
    assert res["value"] == pytest.approx((2 - math.sqrt(2)) / 2 + 0.5, rel=1e-13)


def test_verify_command():
    code, text = call("verify", "--count", "2", "--degree", "6", "--t", "1")
    res = json.loads(text)
    assert code == 0 and res["max_deviation"] < 1e-10 and len(res["rows"]) == 2


def test_krein_command():
    code, text = call("krein", "--theta", "0.5", "--n", "2")
    rows = list(csv.reader(io.StringIO(text)))
    assert rows[0] == ["location", "weight"] and len(rows) == 4
    assert float(rows[1][1]) == pytest.approx(1 / (2 * math.pi), rel=1e-13)
    code, text = call("krein", "--theta", "0.5", "--q", "1")
    row = json.loads(text)[0]
    assert row["reconstruction"] == pytest.approx(row["exact"], rel=1e-3)


def test_simulate_command():
    code, text = call("simulate", "--observable", "killed_semigroup", "--replicas", "2000", "--seed", "7")
    res = json.loads(text)
    assert code == 0
    assert abs(res["value"] - math.exp(-0.5)) < 4 * res["stderr"]
    assert model_from_dict(res["config"]["model"]).quad == model_j().quad
    assert res["config"]["seed"] == 7


def test_simulate_is_deterministic():
    argv = ("simulate", "--observable", "hitting_laplace", "--replicas", "600", "--seed", "3")
    assert call(*argv)[1] == call(*argv)[1]


def test_acceptance_command_subset():
    code, text = call("acceptance", "--only", "1,9")
    lines = text.strip().splitlines()
    assert code == 0
    assert lines[0].startswith("[PASS]  1.") and lines[1].startswith("[PASS]  9.")
    assert lines[-1] == "2/2 criteria passed"


def test_bad_model_file(tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text('{"beta": -0.5,\n  "sigma2": oops}')
    code, _ = call("inspect", "--model", str(bad))
    assert code == 1
    assert "line 2" in capsys.readouterr().err


def test_missing_model_file(capsys):
    code, _ = call("inspect", "--model", "no-such-model.json")
    assert code == 1 and "no model file" in capsys.readouterr().err


def test_usage_errors(capsys):
    assert call("frobnicate")[0] == 2
    assert call("moments", "--kind", "V_psi")[0] == 2
    assert call("phi", "--tag", "bogus", "--q", "1")[0] == 2
    assert "--kind" in capsys.readouterr().err


def test_domain_failure_exit_code():
    assert call("phi", "--tag", "X_laguerre", "--theta", "0.5", "--q", "-1")[0] == 1


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "glsemigroup", "moments", "--kind", "I_phi", "--n", "1"],
                          capture_output=True, text=True, check=True)
    assert json.loads(proc.stdout) == pytest.approx((2 + math.sqrt(2)) / 4, rel=1e-14)
