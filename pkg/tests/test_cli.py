"""End-to-end CLI contract: exit codes, artifact schemas, reproducibility."""

import json
import os
import subprocess
import sys

import pytest

CLI = [sys.executable, "-m", "mqsim.cli"]


def run_cli(*args, env_extra=None):
    env = {k: v for k, v in os.environ.items() if k != "MQ_SEED"}
    if env_extra:
        env.update(env_extra)
    return subprocess.run(
        CLI + [str(a) for a in args], capture_output=True, text=True, env=env
    )


def read_artifact(path):
    lines = path.read_text().splitlines()
    assert lines[0].startswith("# config ")
    config = json.loads(lines[0][len("# config ") :])
    header = lines[1].split(",")
    rows = [line.split(",") for line in lines[2:]]
    return config, header, rows


def test_version_flag():
    out = run_cli("--version")
    assert out.returncode == 0
    assert out.stdout.startswith("mq ")


def test_usage_errors_exit_64():
    assert run_cli().returncode == 64
    assert run_cli("simulate", "chain", "--steps", "nope").returncode == 64
    assert run_cli("verify", "no-such-suite").returncode == 64
    assert run_cli("frobnicate").returncode == 64


def test_domain_errors_exit_2():
    out = run_cli("analyze", "--c", "1", "--n", "8")
    assert out.returncode == 2
    assert "error" in out.stderr
    out = run_cli("analyze", "--sigma", "uniform", "--n", "4")
    assert out.returncode == 2
    assert json.loads(out.stderr)["error"] == "divergence"
    assert run_cli("simulate", "chain", "--sigma", "uniform", "--n", "4").returncode == 2


def test_analyze_reports_exact_rank_error():
    out = run_cli("analyze", "--c", "2", "--n", "16")
    assert out.returncode == 0
    doc = json.loads(out.stdout)
    assert doc["expected_rank_error"] == 12.34375
    assert doc["rank_error"]["closed_form"] == 12.34375
    assert doc["concentration"]["p_star"] == pytest.approx(1.0 / 17.0)
    assert len(doc["stationary_p"]) == 15
    # Concentration quantities only apply to the two-choice analysis.
    assert "concentration" not in json.loads(run_cli("analyze", "--c", "3", "--n", "16").stdout)


def test_analyze_sweep_grid(tmp_path):
    out_path = tmp_path / "sweep.csv"
    assert run_cli("analyze", "--sweep-c", "--out", out_path).returncode == 0
    config, header, rows = read_artifact(out_path)
    assert header == ["c", "integral_f_c", "inv_c_minus_1"]
    assert config["command"] == "analyze-sweep"
    at_two = {r[0]: r for r in rows}["2.0"]
    assert float(at_two[1]) == pytest.approx(5.0 / 6.0, abs=1e-9)
    assert float(at_two[2]) == 1.0


def test_simulate_chain_artifacts(tmp_path):
    out_path = tmp_path / "chain.csv"
    res = run_cli(
        "simulate", "chain", "--n", "4", "--steps", "2e3", "--burnin", "100",
        "--seed", "11", "--out", out_path,
    )
    assert res.returncode == 0
    config, header, rows = read_artifact(out_path)
    assert header == ["step", "i", "observed_rank", "expected_rank", "expected_initial_rank"]
    assert config["steps"] == 2000 and config["seed"] == 11
    assert {r[1] for r in rows} == {"1", "2", "3", "4"}
    hist_config, hist_header, hist_rows = read_artifact(tmp_path / "chain.hist.csv")
    assert hist_header == ["coordinate", "value", "count", "expected_count"]
    coords = {r[0] for r in hist_rows}
    assert "rank_error" in coords and "gap1" in coords and "gap3" in coords
    total = sum(int(r[2]) for r in hist_rows if r[0] == "rank_error")
    assert total == 2000


def test_simulate_chain_zero_steps_header_only(tmp_path):
    out_path = tmp_path / "empty.csv"
    assert run_cli("simulate", "chain", "--n", "4", "--steps", "0", "--out", out_path).returncode == 0
    assert len(out_path.read_text().splitlines()) == 2
    assert len((tmp_path / "empty.hist.csv").read_text().splitlines()) == 2


def test_outputs_are_byte_reproducible(tmp_path):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    args = ("simulate", "chain", "--n", "4", "--steps", "1e3", "--seed", "5", "--out")
    assert run_cli(*args, a).returncode == 0
    assert run_cli(*args, b).returncode == 0
    assert a.read_bytes() == b.read_bytes()
    assert (tmp_path / "a.hist.csv").read_bytes() == (tmp_path / "b.hist.csv").read_bytes()


def test_mq_seed_env_fallback(tmp_path):
    flagged, env_seeded = tmp_path / "flag.csv", tmp_path / "env.csv"
    run_cli("simulate", "chain", "--n", "4", "--steps", "500", "--seed", "9",
            "--out", flagged)
    run_cli("simulate", "chain", "--n", "4", "--steps", "500", "--out", env_seeded,
            env_extra={"MQ_SEED": "9"})
    assert flagged.read_bytes() == env_seeded.read_bytes()


def test_simulate_cankick_row_count(tmp_path):
    out_path = tmp_path / "kick.csv"
    res = run_cli("simulate", "cankick", "--n", "5", "--trials", "40", "--seed", "2",
                  "--out", out_path)
    assert res.returncode == 0
    _, header, rows = read_artifact(out_path)
    assert header == ["trial", "i", "gap"]
    assert len(rows) == 200
    assert all(float(r[2]) > 0.0 for r in rows)


def test_simulate_diverge_defaults_to_uniform(tmp_path):
    out_path = tmp_path / "div.csv"
    res = run_cli("simulate", "diverge", "--n", "4", "--steps", "2e3", "--trials", "5",
                  "--seed", "3", "--out", out_path)
    assert res.returncode == 0
    config, header, rows = read_artifact(out_path)
    assert config["sigma"] == "uniform"
    assert header == ["step", "mean_spread"]
    assert float(rows[-1][1]) > float(rows[0][1])


def test_simulate_ejp_profile(tmp_path):
    out_path = tmp_path / "prof.csv"
    res = run_cli("simulate", "ejp", "--n", "32", "--profile", "--steps", "5e3",
                  "--burnin", "128", "--trials", "1", "--seed", "4", "--out", out_path)
    assert res.returncode == 0
    _, header, rows = read_artifact(out_path)
    assert header == ["x", "empirical", "finite_n", "limit"]
    assert [r[0] for r in rows] == ["0.1", "0.2", "0.3", "0.4", "0.5", "0.6", "0.7", "0.8", "0.9"]


def test_replay_artifacts(tmp_path):
    out_path = tmp_path / "rep.csv"
    res = run_cli("replay", "--n", "4", "--initial", "4e4", "--deletions", "1e4",
                  "--burnin", "1e3", "--seed", "6", "--out", out_path)
    assert res.returncode == 0
    config, header, _ = read_artifact(out_path)
    assert header == ["step", "i", "observed_rank", "expected_rank", "expected_initial_rank"]
    assert config["initial"] == 40000 and config["deletions"] == 10000
    _, hist_header, hist_rows = read_artifact(tmp_path / "rep.hist.csv")
    assert hist_header == ["coordinate", "value", "count", "expected_count"]
    assert sum(int(r[2]) for r in hist_rows) == 9000  # deletions minus burnin


def test_replay_rejects_small_initial_population():
    assert run_cli("replay", "--n", "4", "--initial", "100", "--deletions", "50").returncode == 2


def test_verify_suite_passes_and_writes_json(tmp_path):
    out_path = tmp_path / "verdict.json"
    res = run_cli("verify", "closed-forms", "--out", out_path)
    assert res.returncode == 0
    assert "[pass]" in res.stdout
    doc = json.loads(out_path.read_text())
    assert doc["suite"] == "closed-forms"
    assert doc["passed"] is True
    assert all(c["passed"] for c in doc["checks"])


def test_bench_insert_only_live_equals_ops():
    res = run_cli("bench", "--n", "4", "--ops", "8e3", "--threads", "4",
                  "--mix", "insert-only", "--prefill", "0", "--seed", "1")
    assert res.returncode == 0
    doc = json.loads(res.stdout)
    assert doc["live"] == 8000 == doc["ops_executed"]
    assert doc["deleted"] == 0
    assert doc["conserved"] is True


def test_bench_mixed_conserves():
    res = run_cli("bench", "--n", "4", "--ops", "4e3", "--threads", "2", "--seed", "1")
    assert res.returncode == 0
    doc = json.loads(res.stdout)
    assert doc["conserved"] is True
    assert doc["inserted"] - doc["deleted"] == doc["live"]
