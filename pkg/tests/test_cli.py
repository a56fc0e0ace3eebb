import json

import pytest

from steintail import pearson
from steintail.cli import run
from steintail.pearson import PearsonCoefficients, build_law


def run_cli(capsys, *argv):
    code = run(list(argv))
    captured = capsys.readouterr()
    return code, captured.out, captured.err


def test_classify_prints_case(capsys):
    code, out, _ = run_cli(capsys, "classify", "--alpha", "0", "--beta", "0", "--gamma", "1")
    assert code == 0
    assert out.strip() == "Normal"


def test_classify_invalid_coefficients(capsys):
    code, _, err = run_cli(capsys, "classify", "--alpha", "0", "--beta", "0", "--gamma", "-1")
    assert code == 1
    assert err.strip().count("\n") == 0  # one-line diagnosis


def test_usage_error_exit_1(capsys):
    code, _, err = run_cli(capsys, "classify", "--alpha", "0")
    assert code == 1
    assert "required" in err
    code, _, _ = run_cli(capsys, "no-such-command")
    assert code == 1


def test_unknown_flag_rejected(capsys):
    code, _, _ = run_cli(capsys, "classify", "--alpha", "0", "--beta", "0",
                         "--gamma", "1", "--bogus", "3")
    assert code == 1


def test_law_json_round_trip(capsys, tmp_path):
    out_path = tmp_path / "law.json"
    code, _, _ = run_cli(capsys, "law", "--alpha", "0", "--beta", "2", "--gamma", "2",
                         "--output", str(out_path))
    assert code == 0
    law2 = pearson.law_from_json(out_path.read_text())
    law = build_law(PearsonCoefficients(0.0, 2.0, 2.0))
    for z in [-0.5, 0.0, 1.5]:
        assert pearson.tail(law2, z) == pearson.tail(law, z)
        assert pearson.density(law2, z) == pearson.density(law, z)


def test_tail_grid_csv(capsys):
    code, out, _ = run_cli(capsys, "tail", "--alpha", "0", "--beta", "0", "--gamma", "1",
                           "--grid", "0:2:3")
    assert code == 0
    lines = out.strip().splitlines()
    assert lines[0] == "x,tail"
    assert len(lines) == 4
    x, t = lines[1].split(",")
    assert float(x) == 0.0 and float(t) == 0.5
    # round-trip-exact formatting
    assert float(lines[2].split(",")[1]) == pearson.tail(build_law(PearsonCoefficients(0, 0, 1)), 1.0)


def test_quantile_at(capsys):
    code, out, _ = run_cli(capsys, "quantile", "--alpha", "0", "--beta", "0", "--gamma", "1",
                           "--at", "0.5", "--format", "json")
    assert code == 0
    payload = json.loads(out)
    assert payload[0]["quantile"] == pytest.approx(0.0, abs=1e-12)


def test_moments_table(capsys):
    code, out, _ = run_cli(capsys, "moments", "--alpha", "0.25", "--beta", "0", "--gamma", "0.25",
                           "--max-order", "6")
    assert code == 0
    lines = out.strip().splitlines()
    assert lines[0] == "order,moment"
    assert float(lines[3].split(",")[1]) == pytest.approx(1.0 / 3.0)  # second moment
    assert lines[6].split(",")[1] == ""  # fifth moment does not exist
    assert lines[7].split(",")[1] == ""


def test_stein_csv_and_certificate(capsys):
    code, out, err = run_cli(capsys, "stein", "--alpha", "0", "--beta", "0", "--gamma", "1",
                             "--z", "1", "--grid=-3:3:101")
    assert code == 0
    lines = out.strip().splitlines()
    assert lines[0] == "x,f,fprime,residual"
    assert all(abs(float(line.split(",")[3])) < 1e-8 for line in lines[1:])
    assert "passed=True" in err


def test_stein_json_certificate(capsys):
    code, out, _ = run_cli(capsys, "stein", "--alpha", "0", "--beta", "2", "--gamma", "2",
                           "--z", "2", "--format", "json")
    assert code == 0
    payload = json.loads(out)
    assert payload["certificate"]["sign_violations"] == 0
    assert payload["certificate"]["residual_max"] < 1e-8


def test_envelope_brackets(capsys):
    code, out, _ = run_cli(capsys, "envelope", "--alpha", "0", "--beta", "0", "--gamma", "1",
                           "--grid", "1:4:7")
    assert code == 0
    for line in out.strip().splitlines()[1:]:
        _, lo, t, hi = map(float, line.split(","))
        assert lo <= t <= hi


def test_bounds_table(capsys):
    code, out, _ = run_cli(capsys, "bounds", "--alpha", "0", "--beta", "0", "--gamma", "1",
                           "--z-grid", "1:5:5", "--c", "4", "--K", "1.5")
    assert code == 0
    lines = out.strip().splitlines()
    assert lines[0].startswith("z,phi_star")
    row = dict(zip(lines[0].split(","), lines[1].split(",")))
    assert float(row["pearson_lower"]) <= float(row["phi_star"]) <= float(row["k_phi_star"])


def test_chaos_g_constant(capsys):
    code, out, _ = run_cli(capsys, "chaos-g", "--coeffs", "0,1")
    assert code == 0
    assert out.strip() == "1"


def test_chaos_g_density_export(capsys):
    code, out, _ = run_cli(capsys, "chaos-g", "--coeffs", "0,0,1", "--density-grid", "0:3:4")
    assert code == 0
    lines = out.strip().splitlines()
    assert lines[0] == "2*N^2"
    assert lines[1] == "x,rho"
    gamma = build_law(PearsonCoefficients(0.0, 2.0, 2.0))
    x, rho = map(float, lines[2].split(","))
    assert rho == pytest.approx(pearson.density(gamma, x), rel=1e-10)


def test_chaos_g_h2_with_dominance(capsys):
    code, out, _ = run_cli(capsys, "chaos-g", "--coeffs", "0,0,1",
                           "--alpha", "0", "--beta", "2", "--gamma", "2")
    assert code == 0
    lines = out.strip().splitlines()
    assert lines[0] == "2*N^2"
    assert "dominance_margin=0.0" in lines[1]


def test_verify_scenario_file(capsys, tmp_path):
    scenario = {
        "x_model": {"type": "hermite", "coeffs": [0, 0, 1]},
        "reference": {"alpha": 0, "beta": 2, "gamma": 2},
        "hypothesis": "Sandwich",
        "z_grid": [1, 2, 3],
        "n_samples": 20000,
        "seed": 42,
    }
    path = tmp_path / "scenario.json"
    path.write_text(json.dumps(scenario))
    out_path = tmp_path / "report.csv"
    code, _, _ = run_cli(capsys, "verify", "--scenario", str(path), "--output", str(out_path))
    assert code == 0
    lines = out_path.read_text().strip().splitlines()
    assert lines[0] == "z,phi_star,lower,upper,empirical,ci,verdict"
    assert all(line.endswith("pass") for line in lines[1:])


def test_verify_missing_file(capsys):
    code, _, err = run_cli(capsys, "verify", "--scenario", "/nonexistent.json")
    assert code == 1
    assert err


def test_verify_determinism_bytes(capsys, tmp_path):
    scenario = {
        "x_model": {"type": "pearson", "alpha": 0, "beta": 2, "gamma": 2},
        "reference": {"alpha": 0, "beta": 2, "gamma": 2},
        "hypothesis": "DominatesLower",
        "z_grid": [1, 2],
        "n_samples": 20000,
        "seed": 7,
    }
    path = tmp_path / "s.json"
    path.write_text(json.dumps(scenario))
    outputs = []
    for name in ("a.csv", "b.csv"):
        out_path = tmp_path / name
        code, _, _ = run_cli(capsys, "verify", "--scenario", str(path), "--output", str(out_path))
        assert code == 0
        outputs.append(out_path.read_bytes())
    assert outputs[0] == outputs[1]


def test_asym_loglinear(capsys):
    code, out, _ = run_cli(capsys, "asym", "--alpha", "0", "--beta", "2", "--gamma", "2",
                           "--mode", "loglinear", "--z-grid", "20:200:25", "--format", "json")
    assert code == 0
    payload = json.loads(out)
    assert payload["slope"] == pytest.approx(-0.5, abs=0.01)


def test_asym_insufficient_range(capsys):
    code, _, err = run_cli(capsys, "asym", "--alpha", "0", "--beta", "2", "--gamma", "2",
                           "--mode", "loglog", "--z-grid", "20:100:10")
    assert code == 1
    assert "decade" in err
