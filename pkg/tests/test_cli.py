import csv
import json
import math

import numpy as np
import pytest

from renyi_lab import cli
from renyi_lab.cli import HEADERS, ScenarioError, main, parse_scenario
from renyi_lab.operators import DiagonalModel
from renyi_lab.types import NumericalError

BERNOULLI = {
    "name": "bernoulli",
    "rho": [[0.7, 0.0], [0.0, 0.3]],
    "sigma": [[0.5, 0.0], [0.0, 0.5]],
    "params": {"alpha": [2.0], "kappa": [0.5], "n_grid": [50, 100, 200], "copies": 1, "trials": 2},
}
MODEL = {
    "name": "models",
    "rho": {"family": "power", "beta": 3},
    "sigma": {"family": "superpower", "gamma": 0.5},
    "params": {"alpha": [2.0], "kappa": [0.5], "r_grid": [0.5], "u_grid": {"points": 5}},
}


def write(tmp_path, obj, name="sc.json"):
    path = tmp_path / name
    path.write_text(obj if isinstance(obj, str) else json.dumps(obj))
    return path


def read_csv(path):
    with open(path) as fh:
        return list(csv.reader(fh))


# ---------------------------------------------------------------------------
# parsing


def test_defaults_filled(tmp_path):
    sc = parse_scenario(write(tmp_path, {"rho": [[1, 0], [0, 0]], "sigma": [[0.5, 0], [0, 0.5]]}))
    assert sc.params["alpha"] == [1.5, 2.0, 3.0]
    assert sc.params["kappa"] == [0.25, 0.5, 0.75]
    assert sc.params["seed"] == 0 and sc.params["copies"] == 3
    assert sc.name == "sc"
    assert [p.z for p in sc.pairs()] == [1.5, 2.0, 3.0]


def test_complex_matrix(tmp_path):
    obj = {"rho": {"real": [[0.5, 0], [0, 0.5]], "imag": [[0, 0.1], [-0.1, 0]]}, "sigma": [[0.5, 0], [0, 0.5]]}
    sc = parse_scenario(write(tmp_path, obj))
    assert sc.rho[0, 1] == pytest.approx(0.1j)


def test_model_scenario(tmp_path):
    sc = parse_scenario(write(tmp_path, MODEL))
    assert sc.is_model
    assert isinstance(sc.rho, DiagonalModel) and sc.rho.family == "power"
    assert len(sc.params["u_grid"]) == 5


@pytest.mark.parametrize(
    "patch,where",
    [
        ({"rho": [[1, 0], [0, -0.5]]}, "rho"),
        ({"sigma": [[1, 2], [3, 4]]}, "sigma"),
        ({"params": {"alpha": [2.0, 0.5]}}, "params.alpha[1]"),
        ({"params": {"kappa": [1.5]}}, "params.kappa"),
        ({"params": {"bogus": 1}}, "params.bogus"),
        ({"params": {"copies": 7}}, "params.copies"),
        ({"rho": {"family": "power"}}, "rho.beta"),
        ({"rho": {"family": "nope", "beta": 1}}, "rho.family"),
        ({"sigma": [[1, 0, 0], [0, 0, 0], [0, 0, 0]]}, "sigma"),
    ],
)
def test_invalid_fields_report_path(tmp_path, patch, where):
    obj = dict(BERNOULLI) | patch
    with pytest.raises(ScenarioError) as exc:
        parse_scenario(write(tmp_path, obj))
    assert exc.value.where == where


def test_malformed_json_line_info(tmp_path, capsys):
    path = write(tmp_path, '{\n  "rho": [[1, 0], [0, 0]],\n  "sigma": [[1, 0] [0, 1]]\n}')
    assert main(["compute", "--scenario", str(path), "--out", str(tmp_path)]) == 2
    assert "line 3" in capsys.readouterr().err


def test_non_psd_exit_code(tmp_path, capsys):
    path = write(tmp_path, BERNOULLI | {"rho": [[1, 0], [0, -0.5]]})
    assert main(["compute", "--scenario", str(path), "--out", str(tmp_path)]) == 2
    assert "rho" in capsys.readouterr().err


def test_missing_file(tmp_path):
    assert main(["compute", "--scenario", str(tmp_path / "none.json")]) == 2


def test_numerical_failure_exit_code(tmp_path, monkeypatch):
    def boom(sc):
        raise NumericalError("forced")

    monkeypatch.setitem(cli.RUNNERS, "compute", boom)
    path = write(tmp_path, BERNOULLI)
    assert main(["compute", "--scenario", str(path), "--out", str(tmp_path)]) == 3


# ---------------------------------------------------------------------------
# commands


@pytest.mark.parametrize("command", ["compute", "variational", "hoeffding", "cutoff", "simulate", "measured", "dpi"])
def test_matrix_commands(tmp_path, command):
    path = write(tmp_path, BERNOULLI)
    assert main([command, "--scenario", str(path), "--out", str(tmp_path)]) == 0
    rows = read_csv(tmp_path / f"{command}.csv")
    assert tuple(rows[0]) == HEADERS[command]
    assert len(rows) > 1
    side = json.loads((tmp_path / f"{command}.json").read_text())
    assert side["columns"] == list(HEADERS[command])
    assert side["scenario"]["params"]["seed"] == 0


def test_compute_values(tmp_path):
    path = write(tmp_path, BERNOULLI)
    main(["compute", "--scenario", str(path), "--out", str(tmp_path)])
    row = dict(zip(*read_csv(tmp_path / "compute.csv")))
    assert float(row["Q"]) == pytest.approx(1.16, rel=1e-14)
    assert float(row["D"]) == pytest.approx(math.log(1.16), rel=1e-14)


def test_cutoff_value(tmp_path):
    path = write(tmp_path, BERNOULLI)
    main(["cutoff", "--scenario", str(path), "--out", str(tmp_path)])
    row = dict(zip(*read_csv(tmp_path / "cutoff.csv")))
    assert float(row["value"]) == pytest.approx(math.log(1.16), rel=1e-14)
    assert row["regular"] == "true"


@pytest.mark.parametrize("command", ["compute", "ladder", "hoeffding", "cutoff"])
def test_model_commands(tmp_path, command):
    path = write(tmp_path, MODEL)
    assert main([command, "--scenario", str(path), "--out", str(tmp_path)]) == 0
    assert len(read_csv(tmp_path / f"{command}.csv")) > 1


def test_model_hoeffding_values(tmp_path):
    path = write(tmp_path, MODEL)
    main(["hoeffding", "--scenario", str(path), "--out", str(tmp_path)])
    row = dict(zip(*read_csv(tmp_path / "hoeffding.csv")))
    assert float(row["H_star"]) == -math.inf
    assert float(row["H_hat"]) == 0.0


def test_matrix_only_commands_reject_models(tmp_path):
    path = write(tmp_path, MODEL)
    assert main(["variational", "--scenario", str(path), "--out", str(tmp_path)]) == 2


def test_report(tmp_path):
    path = write(tmp_path, BERNOULLI)
    assert main(["report", "--scenario", str(path), "--out", str(tmp_path)]) == 0
    rep = json.loads((tmp_path / "report.json").read_text())
    assert rep["outputs"] == ["compute", "hoeffding", "cutoff", "variational"]


# ---------------------------------------------------------------------------
# output contract


@pytest.mark.parametrize("command", ["compute", "hoeffding", "measured", "dpi"])
def test_deterministic_bytes(tmp_path, command):
    path = write(tmp_path, BERNOULLI)
    outs = []
    for k in range(2):
        d = tmp_path / f"run{k}"
        main([command, "--scenario", str(path), "--out", str(d)])
        outs.append(((d / f"{command}.csv").read_bytes(), (d / f"{command}.json").read_bytes()))
    assert outs[0] == outs[1]


def test_seed_override_changes_random_output(tmp_path):
    path = write(tmp_path, BERNOULLI | {"params": BERNOULLI["params"] | {"copies": 1}})
    for s in (1, 2):
        main(["dpi", "--scenario", str(path), "--out", str(tmp_path / f"s{s}"), "--seed", str(s)])
    a = (tmp_path / "s1" / "dpi.csv").read_bytes()
    b = (tmp_path / "s2" / "dpi.csv").read_bytes()
    assert a != b


def test_json_round_trip_bit_identical(tmp_path):
    path = write(tmp_path, BERNOULLI)
    main(["hoeffding", "--scenario", str(path), "--out", str(tmp_path)])
    side = json.loads((tmp_path / "hoeffding.json").read_text())
    rows = read_csv(tmp_path / "hoeffding.csv")[1:]
    for csv_row, json_row in zip(rows, side["rows"]):
        for a, b in zip(csv_row, json_row):
            assert float(a) == b
            assert np.float64(float(a)).tobytes() == np.float64(b).tobytes()


def test_bits_scaling(tmp_path):
    path = write(tmp_path, BERNOULLI)
    main(["compute", "--scenario", str(path), "--out", str(tmp_path / "n")])
    main(["compute", "--scenario", str(path), "--out", str(tmp_path / "b"), "--bits"])
    nats = dict(zip(*read_csv(tmp_path / "n" / "compute.csv")))
    bits = dict(zip(*read_csv(tmp_path / "b" / "compute.csv")))
    assert float(bits["D"]) == pytest.approx(float(nats["D"]) / math.log(2), rel=1e-15)
    # Q is not a logarithm and stays unscaled
    assert bits["Q"] == nats["Q"]
    assert json.loads((tmp_path / "b" / "compute.json").read_text())["units"] == "bits"


def test_tol_override_rejected_when_nonpositive(tmp_path):
    path = write(tmp_path, MODEL)
    assert main(["ladder", "--scenario", str(path), "--out", str(tmp_path), "--tol", "0"]) == 2
