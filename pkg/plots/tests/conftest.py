"""Session fixtures that produce real mq artifacts once, via the CLI only."""

import shutil
import subprocess
import sys

import pytest

MQ = [shutil.which("mq")] if shutil.which("mq") else [sys.executable, "-m", "mqsim.cli"]


def mq_run(*args):
    res = subprocess.run(
        MQ + [str(a) for a in args], capture_output=True, text=True
    )
    assert res.returncode == 0, f"mq {' '.join(map(str, args))} failed:\n{res.stderr}"
    return res


@pytest.fixture(scope="session")
def artifact_dir(tmp_path_factory):
    return tmp_path_factory.mktemp("artifacts")


@pytest.fixture(scope="session")
def sweep_csv(artifact_dir):
    path = artifact_dir / "sweep.csv"
    mq_run("analyze", "--sweep-c", "--out", path)
    return path


@pytest.fixture(scope="session")
def chain_hist_csv(artifact_dir):
    path = artifact_dir / "chain.csv"
    mq_run("simulate", "chain", "--n", "4", "--steps", "2e4", "--burnin", "1e3",
           "--seed", "7", "--out", path)
    return artifact_dir / "chain.hist.csv"


@pytest.fixture(scope="session")
def logistic_csv(artifact_dir):
    # Full scale: the empirical profile at n=4096 sits within ~0.01 of the limit.
    path = artifact_dir / "logistic.csv"
    mq_run("simulate", "ejp", "--n", "4096", "--profile", "--steps", "5e5",
           "--burnin", "16384", "--trials", "2", "--seed", "7", "--out", path)
    return path


@pytest.fixture(scope="session")
def replay_csv(artifact_dir):
    path = artifact_dir / "replay.csv"
    mq_run("replay", "--n", "16", "--initial", "4e5", "--deletions", "1e5",
           "--burnin", "1e4", "--seed", "7", "--out", path)
    return path


@pytest.fixture(scope="session")
def migration_csv(artifact_dir):
    # wide queue count: averaging low coordinates beats per-snapshot noise
    path = artifact_dir / "migration.csv"
    mq_run("replay", "--n", "128", "--initial", "1e5", "--deletions", "2e4",
           "--burnin", "2e3", "--seed", "7", "--out", path)
    return path
