import csv
import io
import json
from pathlib import Path

import pytest

from pegsense.cli import run
from pegsense.sensitivity import verdict
from pegsense.solve import residual_scale
from pegsense import build

from conftest import P0

ROOT = Path(__file__).resolve().parents[1]
BASE = json.loads((ROOT / "configs" / "p0.json").read_text())


def write(tmp_path, doc, name="cfg.json"):
    path = tmp_path / name
    path.write_text(json.dumps(doc))
    return str(path)


def with_(**sections):
    doc = json.loads(json.dumps(BASE))
    for k, v in sections.items():
        if v is None:
            doc.pop(k, None)
        else:
            doc[k] = v
    return doc


def zero_reward():
    return with_(model={**BASE["model"], "r_B": 0.0, "r_F": 0.0})


def run_json(capsys, *argv):
    code = run(list(argv))
    return code, json.loads(capsys.readouterr().out)


def test_solve_report(tmp_path, capsys):
    code, rep = run_json(capsys, "solve", "--config", write(tmp_path, BASE))
    assert code == 0
    assert len(rep["pi"]) == 33
    assert set(rep) >= {"pi", "eta", "g", "a", "b", "residuals"}
    assert rep["residuals"]["level_recursive_max_abs_diff"] < 1e-10


def test_solve_csv(tmp_path, capsys):
    assert run(["solve", "--config", write(tmp_path, BASE), "--format", "csv"]) == 0
    rows = list(csv.DictReader(io.StringIO(capsys.readouterr().out)))
    assert len(rows) == 33
    assert rows[0]["region"] == "COMPETITION"


def test_m_too_small_is_config_error(tmp_path, capsys):
    doc = with_(model={**BASE["model"], "m": 2})
    assert run(["solve", "--config", write(tmp_path, doc)]) == 2
    assert "m must be ≥ 3" in capsys.readouterr().err


@pytest.mark.parametrize("doc", [
    with_(extra={"x": 1}),
    with_(model={**BASE["model"], "beta": 1.0}),
    with_(policy={"p": 0.5, "q": 1}),
    with_(model={k: v for k, v in BASE["model"].items() if k != "mu"}),
    with_(model={**BASE["model"], "mu": 0.0}),
    with_(model={**BASE["model"], "gamma": 0.6}),
    with_(model={**BASE["model"], "m": 5.5}),
    with_(policy={"p": 1.5}),
    with_(policy={"per_state": {"3,1": 0.5}}),
    with_(R_list=[-1.0]),
    with_(sweep={"p_grid": [0.0, 2.0]}),
    with_(simulate={"seed": -3}),
])
def test_invalid_configs_rejected(tmp_path, capsys, doc):
    assert run(["sensitivity", "--config", write(tmp_path, doc)]) == 2
    err = capsys.readouterr().err
    assert err.startswith("config error")


def test_missing_and_malformed_files(tmp_path, capsys):
    assert run(["solve", "--config", str(tmp_path / "nope.json")]) == 2
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    assert run(["solve", "--config", str(bad)]) == 2


def test_sensitivity_consistency(tmp_path, capsys):
    code, rep = run_json(capsys, "sensitivity", "--config", write(tmp_path, BASE))
    assert code == 0
    assert rep["a_bar"] * rep["R"] + rep["b_bar"] == pytest.approx(rep["d_eta_dp"], rel=1e-9)
    assert rep["R_star"] == 0.0
    assert rep["recommendation"] == "PegImmediately"


def test_sensitivity_at_threshold_is_indifferent(tmp_path, capsys):
    code, rep = run_json(capsys, "sensitivity", "--config", write(tmp_path, zero_reward()))
    assert code == 0
    assert rep["R"] == rep["R_star"] == 0.0
    assert rep["recommendation"] == "Indifferent"


def test_sensitivity_R_star_omitted_when_a_bar_vanishes(tmp_path, capsys, monkeypatch):
    import pegsense.sensitivity as sens
    monkeypatch.setattr(sens, "linear_coefficients", lambda dyn, a, b, pi: (0.0, -0.2))
    code, rep = run_json(capsys, "sensitivity", "--config", write(tmp_path, BASE))
    assert code == 0
    assert "R_star" not in rep
    assert rep["R_star_reason"].startswith("R_star undefined")
    assert rep["recommendation"] == "WithholdToCap"


def test_sensitivity_multiple_R(tmp_path, capsys):
    code, rep = run_json(capsys, "sensitivity", "--config", write(tmp_path, with_(R_list=[0.0, 2.0])))
    assert code == 0
    assert [r["recommendation"] for r in rep["results"]] == ["Indifferent", "PegImmediately"]


def test_sweep_rows_and_sidecar(tmp_path):
    out = tmp_path / "sweep.csv"
    doc = with_(R_list=[0.0, 1.0, 3.0])
    assert run(["sweep", "--config", write(tmp_path, doc), "--out", str(out)]) == 0
    text = out.read_text()
    lines = text.splitlines()
    assert lines[0] == "R,p,eta,d_eta_dp,sign"
    rows = list(csv.DictReader(io.StringIO(text)))
    assert len(rows) == 63
    keys = [(float(r["R"]), float(r["p"])) for r in rows]
    assert keys == [(R, i / 20) for R in (0.0, 1.0, 3.0) for i in range(21)]
    zero = [float(r["eta"]) for r in rows if float(r["R"]) == 0.0]
    assert len(set(zero)) == 1
    sidecar = json.loads(Path(str(out) + ".verdict.json").read_text())
    scale = residual_scale(build(P0, 0.5))
    for entry in sidecar["verdicts"]:
        etas = [float(r["eta"]) for r in rows if float(r["R"]) == entry["R"]]
        assert verdict(etas, scale) == entry["verdict"]


def test_sweep_floats_round_trip(tmp_path, capsys):
    assert run(["sweep", "--config", write(tmp_path, BASE)]) == 0
    rows = list(csv.DictReader(io.StringIO(capsys.readouterr().out)))
    for r in rows:
        assert format(float(r["eta"]), ".17g") == r["eta"]


def test_simulate_reports_seed_and_is_deterministic(tmp_path, capsys):
    doc = with_(simulate={"seed": 99, "n_cycles": 20000})
    path = write(tmp_path, doc)
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    assert run(["simulate", "--config", path, "--out", str(a)]) == 0
    assert run(["simulate", "--config", path, "--out", str(b)]) == 0
    assert a.read_bytes() == b.read_bytes()
    rep = json.loads(a.read_text())
    assert rep["seed"] == 99
    assert abs(rep["z_score"]) <= 3.0
    assert run(["simulate", "--config", path, "--seed", "5", "--out", str(a)]) == 0
    assert json.loads(a.read_text())["seed"] == 5


def test_simulate_short_horizon_is_numerical_failure(tmp_path, capsys):
    doc = with_(simulate={"seed": 1, "horizon": 1e-9})
    assert run(["simulate", "--config", write(tmp_path, doc)]) == 3


def test_reports_byte_identical(tmp_path):
    path = write(tmp_path, BASE)
    for cmd in ("solve", "sensitivity", "sweep"):
        a, b = tmp_path / f"{cmd}1", tmp_path / f"{cmd}2"
        run([cmd, "--config", path, "--out", str(a)])
        run([cmd, "--config", path, "--out", str(b)])
        assert a.read_bytes() == b.read_bytes()


def fast_validate(**extra):
    return with_(validate={"seed": 7, "n_pairs": 20, "n_derivative_points": 10, "mc_cycles": 20000, **extra})


def test_validate_passes(tmp_path, capsys):
    assert run(["validate", "--config", write(tmp_path, fast_validate())]) == 0
    lines = capsys.readouterr().out.splitlines()
    assert len(lines) == 8 and all(line.startswith("PASS") for line in lines)


def test_validate_corrupt_generator_fails(tmp_path, capsys):
    code = run(["validate", "--config", write(tmp_path, fast_validate(corrupt_generator=True)),
                "--format", "json"])
    assert code == 1
    rep = json.loads(capsys.readouterr().out)
    failed = {c["name"] for c in rep["checks"] if not c["passed"]}
    assert "level_recursive_vs_direct" in failed


def test_csv_format_rejected_for_json_only_commands(tmp_path, capsys):
    assert run(["sensitivity", "--config", write(tmp_path, BASE), "--format", "csv"]) == 2


def test_zero_reward_through_every_command(tmp_path, capsys):
    doc = zero_reward()
    doc["validate"] = fast_validate()["validate"]
    doc["simulate"] = {"seed": 3, "n_cycles": 5000}
    path = write(tmp_path, doc)
    C = P0.C

    code, rep = run_json(capsys, "solve", "--config", path)
    assert code == 0 and rep["eta"] == -C
    assert all(v == 0.0 for v in rep["g"].values())

    code, rep = run_json(capsys, "sensitivity", "--config", path)
    assert code == 0 and rep["eta"] == -C and rep["d_eta_dp"] == 0.0

    assert run(["sweep", "--config", path]) == 0
    rows = list(csv.DictReader(io.StringIO(capsys.readouterr().out)))
    assert all(float(r["eta"]) == -C and float(r["d_eta_dp"]) == 0.0 for r in rows)

    code, rep = run_json(capsys, "simulate", "--config", path)
    assert code == 0 and rep["eta_hat"] == -C and rep["std_err"] == 0.0

    code, rep = run_json(capsys, "validate", "--config", path, "--format", "json")
    assert code == 0
    for c in rep["checks"]:
        if c["name"] in ("difference_equation", "derivative_vs_finite_difference", "monte_carlo_vs_analytic"):
            assert c["residual"] == 0.0
