import json

import pytest

from robusthedge.cli import main


def write_config(tmp_path, doc, name="config.json"):
    path = tmp_path / name
    path.write_text(json.dumps(doc))
    return path


BASE_CONFIG = {
    "schema_version": 1,
    "tree": {"dim": 1, "depth": 2, "generator": {"kind": "trinomial"}},
    "claim": {"kind": "abs"},
    "family": {"class": "martingale", "claim_restricted": False},
    "seed": 20260823,
    "instances": 5,
}


def test_solve_report(tmp_path):
    cfg = write_config(tmp_path, BASE_CONFIG)
    assert main(["solve", "--config", str(cfg), "--out", str(tmp_path)]) == 0
    report = json.loads((tmp_path / "solve_report.json").read_text())
    assert report["schema_version"] == 1
    assert report["dual_value"] == pytest.approx(1.0)
    assert report["oracle_value"] == pytest.approx(1.0)
    assert report["primal_value"] == pytest.approx(1.0)
    assert report["ok"] and not report["oracle_skipped"]
    assert (tmp_path / "timings.json").exists()


def test_solve_exact_mode(tmp_path):
    cfg = write_config(tmp_path, BASE_CONFIG)
    assert main(["solve", "--config", str(cfg), "--exact", "--out", str(tmp_path)]) == 0
    report = json.loads((tmp_path / "solve_report.json").read_text())
    assert report["exact"] and report["dual_value"] == "1"
    assert report["gaps"]["dp_minus_oracle"] == 0.0


def test_solve_var_bounded_strictly_below_martingale(tmp_path):
    doc = dict(BASE_CONFIG)
    doc["family"] = {"class": "var_bounded", "var_lo": 0.2, "var_hi": 0.6}
    cfg = write_config(tmp_path, doc)
    assert main(["solve", "--config", str(cfg), "--out", str(tmp_path)]) == 0
    report = json.loads((tmp_path / "solve_report.json").read_text())
    assert report["ok"]
    assert report["dual_value"] < 1.0  # tighter family, cheaper sup


def test_solve_reports_polar_path(tmp_path):
    doc = dict(BASE_CONFIG)
    doc["tree"] = {"dim": 1, "depth": 1, "generator": {"kind": "trinomial"}}
    doc["claim"] = {"kind": "table", "values": {"1": 1, "2": "-inf", "3": 1}}
    doc["family"] = {"class": "martingale", "claim_restricted": True}
    cfg = write_config(tmp_path, doc)
    assert main(["solve", "--config", str(cfg), "--out", str(tmp_path)]) == 0
    report = json.loads((tmp_path / "solve_report.json").read_text())
    assert report["dual_value"] == pytest.approx(1.0)
    assert report["polar_path_count"] == 1


def test_hedge_outputs(tmp_path):
    cfg = write_config(tmp_path, BASE_CONFIG)
    assert main(["hedge", "--config", str(cfg), "--out", str(tmp_path)]) == 0
    doc = json.loads((tmp_path / "hedge.json").read_text())
    assert doc["X0"] == pytest.approx(1.0)
    assert doc["verification"]["min_slack"] >= -1e-9
    assert set(doc["strategy"]) == {"0", "1", "2", "3"}
    lines = (tmp_path / "path_slacks.csv").read_text().splitlines()
    assert lines[0] == "leaf,slack"
    assert len(lines) == 1 + 9  # one row per non-polar leaf


def test_oracle_csv(tmp_path):
    cfg = write_config(tmp_path, BASE_CONFIG)
    assert main(["oracle", "--config", str(cfg), "--out", str(tmp_path)]) == 0
    lines = (tmp_path / "oracle.csv").read_text().splitlines()
    assert lines[0] == "seed,dp_value,lp_value,gap"
    assert len(lines) == 1 + 5
    for line in lines[1:]:
        assert float(line.split(",")[3]) <= 1e-9


def test_counterexample_artifacts(tmp_path):
    cfg = write_config(tmp_path, {"counterexample": {"N": 3}})
    assert main(["counterexample", "--config", str(cfg), "--out", str(tmp_path)]) == 0
    lines = (tmp_path / "divergence.csv").read_text().splitlines()
    assert lines[0] == "i,sigma_i,f_i,partial_sum"
    assert len(lines) == 1 + 3
    sweep = (tmp_path / "phi_sweep.csv").read_text().splitlines()
    assert sweep[0] == "k,K,l,x,phi_trunc,phi_limit,abs_err"


def test_proptest_summary(tmp_path, capsys):
    cfg = write_config(
        tmp_path,
        {
            "seed": 20260823,
            "suites": {
                "closure": 5,
                "truncation": 5,
                "tower": 5,
                "supermartingale": 10,
                "ess_sup": 5,
                "upward": 5,
                "envelope": 20,
            },
        },
    )
    assert main(["proptest", "--config", str(cfg), "--out", str(tmp_path)]) == 0
    out = capsys.readouterr().out
    assert "[PASS] negative-control: 1/1" in out
    doc = json.loads((tmp_path / "proptest.json").read_text())
    assert doc["seed"] == 20260823
    assert all(s["passed"] == s["total"] for s in doc["suites"])


def test_reruns_are_byte_identical(tmp_path):
    cfg = write_config(tmp_path, BASE_CONFIG)
    a, b = tmp_path / "a", tmp_path / "b"
    for out in (a, b):
        assert main(["solve", "--config", str(cfg), "--out", str(out)]) == 0
        assert main(["oracle", "--config", str(cfg), "--out", str(out)]) == 0
        assert main(["counterexample", "--config", str(cfg), "--out", str(out)]) == 0
    for name in ("solve_report.json", "oracle.csv", "divergence.csv", "phi_sweep.csv"):
        assert (a / name).read_bytes() == (b / name).read_bytes()


def test_missing_config_field_is_reported(tmp_path):
    cfg = write_config(tmp_path, {"tree": BASE_CONFIG["tree"]})
    with pytest.raises(SystemExit) as exc:
        main(["solve", "--config", str(cfg), "--out", str(tmp_path)])
    assert "claim" in str(exc.value)


def test_malformed_config_is_reported(tmp_path):
    path = tmp_path / "bad.json"
    path.write_text("{not json")
    with pytest.raises(SystemExit) as exc:
        main(["solve", "--config", str(path), "--out", str(tmp_path)])
    assert "line" in str(exc.value)
