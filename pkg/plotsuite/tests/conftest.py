"""Shared fixtures: real run directories produced by the installed
``ringtraffic`` CLI, driven through subprocess exactly as a user would.
The figure package is exercised only against these artifacts — it never
imports the simulator.
"""

import shutil
import subprocess

import pytest

RINGTRAFFIC = shutil.which("ringtraffic")


def make_run(out_dir, *args):
    assert RINGTRAFFIC is not None, "ringtraffic CLI not on PATH"
    proc = subprocess.run(
        [RINGTRAFFIC, "run", *args, "--out", str(out_dir)],
        capture_output=True, text=True)
    assert proc.returncode == 0, proc.stderr
    return out_dir


@pytest.fixture(scope="session")
def free_run(tmp_path_factory):
    """Fresh free-response run: velocity kick on car 5, default ring."""
    return make_run(tmp_path_factory.mktemp("runs") / "free",
                    "--preset", "paper-table1", "--T", "30")


@pytest.fixture(scope="session")
def accel_run(tmp_path_factory):
    """Acceleration noise on car 5 (the conserving scenario)."""
    return make_run(tmp_path_factory.mktemp("runs") / "accel",
                    "--preset", "paper-table1", "--scenario", "accel-noise",
                    "--T", "20", "--seed", "11")


@pytest.fixture(scope="session")
def vel_mc_run(tmp_path_factory):
    """Velocity-noise Monte Carlo run; also carries a one-shot trajectory."""
    return make_run(tmp_path_factory.mktemp("runs") / "velmc",
                    "--preset", "paper-table1", "--scenario", "vel-noise",
                    "--T", "50", "--runs", "300", "--seed", "3")


@pytest.fixture(scope="session")
def quiet_mc_run(tmp_path_factory):
    """Monte Carlo run with the noise switched off (sigma_v = 0)."""
    return make_run(tmp_path_factory.mktemp("runs") / "quiet",
                    "--preset", "paper-table1", "--scenario", "vel-noise",
                    "--sigma-v", "0", "--T", "5", "--runs", "20")
