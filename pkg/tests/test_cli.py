import csv
import json

import numpy as np
import pytest

from repeated_qsde import cli
from repeated_qsde.cli import CSV_HEADER, encode_array, main, parse_config
from repeated_qsde.errors import ValidationError

FAST = {"k_grid": [4, 5, 6], "t_level": 2, "alphas": [[1, 0]], "betas": [[0, 1]],
        "cocycle": {"k_values": [0, 1, 2]}}


def write_config(tmp_path, cfg):
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps(cfg))
    return str(path)


def stderr_json(capsys):
    err = capsys.readouterr().err.strip().splitlines()
    return json.loads(err[-1])


def test_parse_minimal_defaults():
    cfg = parse_config("")
    assert cfg.model == {"example": "spin_chain", "params": {}}
    assert cfg.k_grid == list(range(6, 15))
    assert cfg.tolerances["rate_window"] == [-0.7, -0.3]
    assert cfg.seed == 0 and cfg.checks == {"hp": True, "cocycle": True, "convergence": True}
    assert parse_config('{"model": {"example": "linear_system"}}').u_span == 6


def test_canonical_round_trip():
    cfg = parse_config(json.dumps({**FAST, "seed": 5, "model": {"example": "holevo_truncated"}}))
    again = parse_config(cfg.canonical())
    assert again == cfg and again.canonical() == cfg.canonical()


@pytest.mark.parametrize("doc,key", [
    ({"bogus": 1}, "bogus"),
    ({"tolerances": {"hp": 1, "x": 2}}, "tolerances.x"),
    ({"model": {"example": "spin_chain", "params": {"Q": 1}}}, "model.params.Q"),
    ({"model": {"inline": {"dim_initial": 1, "extra": 0}}}, "model.inline.extra"),
])
def test_unknown_keys_rejected(doc, key):
    with pytest.raises(ValidationError) as info:
        parse_config(json.dumps(doc))
    assert info.value.key == key


def test_bad_values_rejected():
    with pytest.raises(ValidationError, match="k_grid"):
        parse_config('{"k_grid": [5, 4]}')
    with pytest.raises(ValidationError, match="JSON"):
        parse_config("{nope")
    with pytest.raises(ValidationError, match="unknown example"):
        parse_config('{"model": {"example": "x"}}')


def test_non_hermitian_parameter_named(tmp_path, capsys):
    z = np.zeros((2, 2))
    bad = np.array([[0, 1], [0, 0]], dtype=complex)
    params = {"F": encode_array(bad), **{k: encode_array(z) for k in ("G1", "G2", "H", "HK")}}
    path = write_config(tmp_path, {"model": {"example": "spin_chain", "params": params}})
    assert main(["coeffs", "--config", path]) == 2
    err = stderr_json(capsys)
    assert err["error"] == "ValidationError"
    assert err["key"] == "model.params.F"
    assert err["residual"] == pytest.approx(np.sqrt(2))


def test_coeffs_command(tmp_path, capsys):
    assert main(["coeffs", "--out", str(tmp_path)]) == 0
    doc = json.loads((tmp_path / "coeffs.json").read_text())
    assert set(doc["coefficients"]) == {"N[1,1]", "M[1]", "L[1]", "K"}
    assert json.loads(capsys.readouterr().out) == doc


def test_check_hp_scaled_n(tmp_path, capsys):
    assert main(["check-hp"]) == 0
    capsys.readouterr()
    path = write_config(tmp_path, {"perturb": {"scale_N": 2.0}})
    assert main(["check-hp", "--config", path]) == 1
    out = json.loads(capsys.readouterr().out)
    assert out["hp"]["passed"] is False


def test_cocycle_check(tmp_path, capsys):
    path = write_config(tmp_path, FAST)
    assert main(["cocycle-check", "--config", path, "--out", str(tmp_path), "--seed", "3"]) == 0
    doc = json.loads((tmp_path / "report.json").read_text())
    assert doc["seed"] == 3
    assert doc["cocycle"]["max_defect"] < 1e-10
    assert len(doc["cocycle"]["cells"]) == 3 * 3 * 3


def test_converge_csv_format(tmp_path, capsys):
    path = write_config(tmp_path, FAST)
    main(["converge", "--config", path, "--out", str(tmp_path)])
    text = (tmp_path / "cells.csv").read_text()
    rows = list(csv.reader(text.splitlines()))
    assert tuple(rows[0]) == CSV_HEADER
    assert len(rows) == 1 + 3 * 5
    for row in rows[1:]:
        residual = row[4]
        assert float(residual) == float(format(float(residual), ".17g"))
        assert repr(float(residual)) == repr(float(format(float(residual), ".17g")))
    report = json.loads((tmp_path / "report.json").read_text())
    assert report["convergence"]["k_grid"] == [4, 5, 6]


def test_converge_deterministic(tmp_path):
    path = write_config(tmp_path, FAST)
    a, b = tmp_path / "a", tmp_path / "b"
    main(["converge", "--config", path, "--out", str(a), "--seed", "11"])
    main(["converge", "--config", path, "--out", str(b), "--seed", "11"])
    assert (a / "cells.csv").read_bytes() == (b / "cells.csv").read_bytes()


def test_vacuum_kernel_violation_flagged(tmp_path, capsys):
    e0, e1 = [[1, 0], [0, 0]], [[0, 0], [1, 0]]
    inline = {
        "dim_initial": 1, "dim_noise": 2, "channels": 1,
        "F_list": [[[[1, 0]]]], "G_list": [[[[1, 0]]]],
        "lambda_list": [[[[1, 0], [0, 0]], [[0, 0], [1, 0]]]],
        "mu_list": [[[[0, 0], [1, 0]], [[1, 0], [0, 0]]]],
        "chi": [e0, e1],
    }
    cfg = {**FAST, "model": {"inline": inline}}
    path = write_config(tmp_path, cfg)
    assert main(["converge", "--config", path]) == 2
    assert "vacuum-kernel" in stderr_json(capsys)["message"]
    cfg["perturb"] = {"skip_validation": True}
    path = write_config(tmp_path, cfg)
    assert main(["converge", "--config", path, "--out", str(tmp_path)]) == 1
    report = json.loads((tmp_path / "report.json").read_text())
    assert report["convergence"]["passed"] is False
    assert {d["status"] for d in report["convergence"]["drives"]} == {"diverging"}


def test_example_requires_known_name(capsys):
    assert main(["example"]) == 2
    assert stderr_json(capsys)["key"] == "name"
    assert main(["example", "nope"]) == 2
    capsys.readouterr()


def test_example_small_run(tmp_path, capsys):
    path = write_config(tmp_path, FAST)
    code = main(["example", "pure_hamiltonian", "--config", path, "--out", str(tmp_path)])
    doc = json.loads((tmp_path / "report.json").read_text())
    assert doc["model"] == "pure_hamiltonian"
    assert doc["config"]["tolerances"]["rate_window"] == [-1.2, -0.8]
    assert {p.name for p in tmp_path.iterdir()} >= {"report.json", "cells.csv", "coeffs.json"}
    assert code == (0 if doc["passed"] else 1)


def test_echo_config(capsys):
    assert main(["check-hp", "--echo-config", "--seed", "9"]) == 0
    assert json.loads(capsys.readouterr().out)["seed"] == 9


def test_initial_vectors():
    vecs = cli.initial_vectors(5, 2, seed=0)
    assert len(vecs) == 3
    assert np.count_nonzero(vecs[-1][2:]) == 0
    assert np.linalg.norm(vecs[-1]) == pytest.approx(1.0)
