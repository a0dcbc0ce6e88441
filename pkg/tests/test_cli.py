import json

import pytest

from uncollapse import cli


def run_cli(args):
    return cli.main(args)


def test_run_charge_qnd_and_determinism(tmp_path):
    cfg = {
        "kind": "charge-qnd",
        "seed": 5,
        "trajectories": 20_000,
        "r0": 1.0,
        "state": "plus",
        "out": str(tmp_path / "a"),
    }
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps(cfg))
    assert run_cli(["run", "--config", str(path)]) == cli.EXIT_OK
    assert run_cli(["run", "--config", str(path), "--out", str(tmp_path / "b")]) == cli.EXIT_OK
    first = (tmp_path / "a" / "results.csv").read_bytes()
    second = (tmp_path / "b" / "results.csv").read_bytes()
    assert first == second
    summary = json.loads((tmp_path / "a" / "summary.json").read_text())
    assert summary["passed"] is True
    for row in summary["rows"]:
        assert "reference" in row and "within" in row


def test_run_reproduces_from_effective_config(tmp_path):
    cfg = {
        "kind": "phase",
        "seed": 12,
        "trajectories": 30_000,
        "p_t": 0.5,
        "state": "plus",
        "out": str(tmp_path / "x"),
    }
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps(cfg))
    assert run_cli(["run", "--config", str(path)]) == cli.EXIT_OK
    echo = tmp_path / "x" / "effective_config.json"
    assert run_cli(["run", "--config", str(echo), "--out", str(tmp_path / "y")]) == cli.EXIT_OK
    assert (tmp_path / "x" / "results.csv").read_bytes() == (
        tmp_path / "y" / "results.csv"
    ).read_bytes()


def test_unknown_field_rejected(tmp_path):
    path = tmp_path / "bad.json"
    path.write_text(json.dumps({"kind": "charge-qnd", "bogus": 1}))
    assert run_cli(["run", "--config", str(path)]) == cli.EXIT_CONFIG


def test_invalid_json_rejected(tmp_path):
    path = tmp_path / "bad.json"
    path.write_text("{not json")
    assert run_cli(["run", "--config", str(path)]) == cli.EXIT_CONFIG


def test_bad_kind_rejected(tmp_path):
    path = tmp_path / "bad.json"
    path.write_text(json.dumps({"kind": "nope"}))
    assert run_cli(["run", "--config", str(path)]) == cli.EXIT_CONFIG


def test_numeric_failure_exit_code(tmp_path):
    cfg = {
        "kind": "phase",
        "seed": 3,
        "trajectories": 100,
        "p_t": 0.99999,
        "state": "two",
        "out": str(tmp_path / "nf"),
    }
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps(cfg))
    assert run_cli(["run", "--config", str(path)]) == cli.EXIT_NUMERIC


def test_env_override(tmp_path, monkeypatch):
    cfg = {"kind": "charge-total", "trajectories": 5000, "duration_tau": 1.0}
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps(cfg))
    monkeypatch.setenv("UNCOLLAPSE_OUT", str(tmp_path / "env_out"))
    monkeypatch.setenv("UNCOLLAPSE_SEED", "42")
    assert run_cli(["run", "--config", str(path)]) == cli.EXIT_OK
    echoed = json.loads((tmp_path / "env_out" / "effective_config.json").read_text())
    assert echoed["seed"] == 42


def test_sweep_total_reversibility(tmp_path):
    cfg = {
        "kind": "charge-total",
        "seed": 9,
        "trajectories": 20_000,
        "sweep_parameter": "duration_tau",
        "sweep_values": [0.5, 1.0, 2.0, 4.0],
        "out": str(tmp_path / "sweep"),
    }
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps(cfg))
    assert run_cli(["sweep", "--config", str(path)]) == cli.EXIT_OK
    summary = json.loads((tmp_path / "sweep" / "summary.json").read_text())
    assert summary["passed"] is True
    assert len(summary["rows"]) == 4


def test_sweep_phase_joint_success(tmp_path):
    cfg = {
        "kind": "phase",
        "seed": 4,
        "trajectories": 30_000,
        "state": "plus",
        "sweep_parameter": "p_t",
        "sweep_values": [0.2, 0.5, 0.8],
        "out": str(tmp_path / "sweep"),
    }
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps(cfg))
    assert run_cli(["sweep", "--config", str(path)]) == cli.EXIT_OK
    summary = json.loads((tmp_path / "sweep" / "summary.json").read_text())
    joint = [r for r in summary["rows"] if "joint_success_rate" in r["label"]]
    assert len(joint) == 3
    for row, p_t in zip(joint, (0.2, 0.5, 0.8)):
        assert row["reference"] == pytest.approx(1.0 - p_t)
        assert row["within"] is True


def test_sweep_empty_range(tmp_path):
    cfg = {
        "kind": "charge-total",
        "sweep_parameter": "duration_tau",
        "sweep_values": [],
        "out": str(tmp_path / "sweep"),
    }
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps(cfg))
    assert run_cli(["sweep", "--config", str(path)]) == cli.EXIT_OK
    text = (tmp_path / "sweep" / "results.csv").read_text()
    assert text.splitlines() == ["label,value,ci_low,ci_high,reference,within"]


def test_analytics_outputs(tmp_path):
    assert run_cli(["analytics", "--out", str(tmp_path / "ana"), "--seed", "1"]) == cli.EXIT_OK
    curves = (tmp_path / "ana" / "curves.csv").read_text().splitlines()
    assert curves[0] == "r0,tau,pdf,cdf"
    assert len(curves) > 100
    # long-tailed, peaked shape: pdf rises then falls along each r0 slice
    import csv as csvmod

    rows = [r for r in csvmod.DictReader(curves) if float(r["r0"]) == 1.0]
    pdf = [float(r["pdf"]) for r in rows]
    peak = pdf.index(max(pdf))
    assert 0 < peak < len(pdf) - 1
    assert pdf[-1] < max(pdf) / 10.0


def test_selftest_smoke_and_failure_exit(tmp_path):
    code = run_cli(
        [
            "selftest", "--scale", "0.01", "--criteria", "5",
            "--seed", "11", "--out", str(tmp_path / "st"),
        ]
    )
    assert code == cli.EXIT_OK
    assert (tmp_path / "st" / "acceptance.json").exists()
    assert (tmp_path / "st" / "acceptance.csv").exists()
    # statistically guaranteed failure: KS tolerance at tiny sample size
    code = run_cli(
        [
            "selftest", "--scale", "0.004", "--criteria", "2",
            "--seed", "11", "--out", str(tmp_path / "st2"),
        ]
    )
    assert code == cli.EXIT_ACCEPTANCE


def test_selftest_deterministic_across_workers(tmp_path):
    for label, workers in (("w1", "1"), ("w2", "2")):
        code = run_cli(
            [
                "selftest", "--scale", "0.02", "--criteria", "1,3,5",
                "--seed", "11", "--workers", workers, "--out", str(tmp_path / label),
            ]
        )
        assert code == cli.EXIT_OK
    assert (tmp_path / "w1" / "acceptance.json").read_bytes() == (
        tmp_path / "w2" / "acceptance.json"
    ).read_bytes()
    assert (tmp_path / "w1" / "acceptance.csv").read_bytes() == (
        tmp_path / "w2" / "acceptance.csv"
    ).read_bytes()


def test_explicit_state_matrix(tmp_path):
    cfg = {
        "kind": "charge-qnd",
        "seed": 2,
        "trajectories": 5000,
        "state": {"rho": [[0.25, 0.0], [0.0, 0.75]]},
        "out": str(tmp_path / "m"),
    }
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps(cfg))
    assert run_cli(["run", "--config", str(path)]) == cli.EXIT_OK
    bad = dict(cfg, state={"rho": [[2.0, 0.0], [0.0, -1.0]]})
    path.write_text(json.dumps(bad))
    assert run_cli(["run", "--config", str(path)]) == cli.EXIT_CONFIG
