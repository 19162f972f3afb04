"""Loaders for the CSV artifacts a simulation run directory carries.

A *run directory* is whatever ``ringtraffic run`` left behind:

    config.resolved     INI echo of every parameter the run used
    trajectory.csv      state history of a single realisation
    variance.csv        Monte Carlo variance of the summed-spacing mode
                        (present only when the run was repeated)

Figures consume these files and nothing else; the simulator package is
never imported.  Anything off-schema raises :class:`RunDataError` with
a message naming the offending file and, for header problems, the first
missing column.
"""

from __future__ import annotations

import configparser
import io
import re
from dataclasses import dataclass
from pathlib import Path

import numpy as np

__all__ = [
    "RunDataError",
    "RunConfig",
    "TrajectoryTable",
    "VarianceTable",
    "load_config",
    "load_trajectory",
    "load_variance",
    "trajectory_schema",
    "VARIANCE_SCHEMA",
]


class RunDataError(Exception):
    """A run directory does not match the expected layout."""


_VEHICLE_COL = re.compile(r"^(s|v|dv|da)([1-9][0-9]*)$")

VARIANCE_SCHEMA = ["t", "var_x11", "mean_x11", "n_runs"]


def trajectory_schema(n: int) -> list[str]:
    """Ordered column names of ``trajectory.csv`` for an ``n``-vehicle ring."""
    head = ["t"]
    for i in range(1, n + 1):
        head += [f"s{i}", f"v{i}"]
    head += ["u", "mode_x11"]
    for i in range(1, n + 1):
        head += [f"dv{i}", f"da{i}"]
    return head


def _read_csv(path: Path) -> tuple[list[str], np.ndarray]:
    if not path.is_file():
        raise RunDataError(f"no {path.name} in {path.parent}")
    lines = path.read_text().splitlines()
    if not lines:
        raise RunDataError(f"{path.name} is empty")
    names = [c.strip() for c in lines[0].split(",")]
    rows = [ln for ln in lines[1:] if ln.strip()]
    if not rows:
        raise RunDataError(f"{path.name} has a header but no data rows")
    try:
        data = np.loadtxt(io.StringIO("\n".join(rows)), delimiter=",",
                          ndmin=2)
    except ValueError as exc:
        raise RunDataError(f"{path.name}: {exc}") from None
    if data.shape[1] != len(names):
        raise RunDataError(
            f"{path.name}: header names {len(names)} columns but data rows "
            f"carry {data.shape[1]}")
    return names, data


def _check_schema(names: list[str], expected: list[str], fname: str) -> None:
    present = set(names)
    for name in expected:
        if name not in present:
            raise RunDataError(f"{fname}: missing column '{name}'")
    wanted = set(expected)
    for name in names:
        if name not in wanted:
            raise RunDataError(f"{fname}: unexpected column '{name}'")
    if names != expected:
        raise RunDataError(f"{fname}: columns out of order")


@dataclass(frozen=True)
class TrajectoryTable:
    """Per-vehicle deviations from equilibrium on a shared time grid."""

    times: np.ndarray       # (m,), seconds
    spacings: np.ndarray    # (m, n), meters
    velocities: np.ndarray  # (m, n), meters/second

    @property
    def n(self) -> int:
        return self.spacings.shape[1]


def load_trajectory(run_dir: Path | str) -> TrajectoryTable:
    """Read and validate ``trajectory.csv``; ring size comes from the header."""
    names, data = _read_csv(Path(run_dir) / "trajectory.csv")
    n = 0
    for name in names:
        match = _VEHICLE_COL.match(name)
        if match:
            n = max(n, int(match.group(2)))
    if n == 0:
        raise RunDataError("trajectory.csv: no per-vehicle columns in header")
    _check_schema(names, trajectory_schema(n), "trajectory.csv")
    cols = {name: j for j, name in enumerate(names)}
    spacings = np.column_stack([data[:, cols[f"s{i}"]]
                                for i in range(1, n + 1)])
    velocities = np.column_stack([data[:, cols[f"v{i}"]]
                                  for i in range(1, n + 1)])
    return TrajectoryTable(times=data[:, cols["t"]], spacings=spacings,
                           velocities=velocities)


@dataclass(frozen=True)
class VarianceTable:
    """Monte Carlo variance of the summed-spacing mode against time."""

    times: np.ndarray     # (m,), seconds
    variance: np.ndarray  # (m,), meters squared
    n_runs: int


def load_variance(run_dir: Path | str) -> VarianceTable:
    names, data = _read_csv(Path(run_dir) / "variance.csv")
    _check_schema(names, VARIANCE_SCHEMA, "variance.csv")
    return VarianceTable(times=data[:, 0], variance=data[:, 1],
                         n_runs=int(round(float(data[-1, 3]))))


@dataclass(frozen=True)
class RunConfig:
    """The slice of ``config.resolved`` the figures need."""

    n: int
    scenario: str
    sigma_v: float
    sigma_a: float


def load_config(run_dir: Path | str) -> RunConfig:
    path = Path(run_dir) / "config.resolved"
    if not path.is_file():
        raise RunDataError(f"no config.resolved in {Path(run_dir)}")
    parser = configparser.ConfigParser()
    parser.optionxform = str
    parser.read(path)
    try:
        return RunConfig(
            n=parser.getint("ring", "n"),
            scenario=parser.get("scenario", "kind"),
            sigma_v=parser.getfloat("scenario", "sigma_v"),
            sigma_a=parser.getfloat("scenario", "sigma_a"),
        )
    except (configparser.Error, ValueError) as exc:
        raise RunDataError(f"config.resolved: {exc}") from None
