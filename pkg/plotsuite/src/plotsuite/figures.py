"""Publication-style figures for simulation run directories.

Two renderers cover the four figure kinds:

* :func:`render_trajectory` — two stacked panels, spacing deviations
  above velocity deviations, one line per vehicle.  Serves the
  ``free-response``, ``accel-noise``, and ``vel-noise`` kinds, which
  differ only in the run that produced the data and in the title.
* :func:`render_variance` — Monte Carlo variance of the summed-spacing
  mode against time as a thinned scatter, with the predicted diffusive
  growth line overlaid and a least-squares fit quoted in the legend.

Output format follows the file suffix; a path without a suffix gets
``.svg`` so the default stays vector.  SVG output is byte-reproducible:
text stays text, element ids are salted deterministically, and no
creation date is embedded.  Every validation error is raised before an
output file exists, so a failed render leaves nothing behind.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import matplotlib
import numpy as np

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402  (backend pinned above)

from .runs import RunDataError, load_config, load_trajectory, load_variance

__all__ = [
    "TRAJECTORY_KINDS",
    "FIGURE_KINDS",
    "VarianceFigure",
    "predicted_growth_rate",
    "render_trajectory",
    "render_variance",
    "vehicle_color",
]

plt.rcParams["svg.fonttype"] = "none"
plt.rcParams["svg.hashsalt"] = "plotsuite"

TRAJECTORY_KINDS = ("free-response", "accel-noise", "vel-noise")
FIGURE_KINDS = TRAJECTORY_KINDS + ("variance-growth",)

_TITLES = {
    "free-response": "Free response",
    "accel-noise": "Acceleration noise",
    "vel-noise": "Velocity noise",
    "variance-growth": "Mode variance growth",
}

# 20 distinct hues: the strong decade first, then the pale variants.
_PALETTE = (matplotlib.colormaps["tab10"].colors
            + matplotlib.colormaps["tab20"].colors[1::2])

_SCATTER_COLOR = "#4878a8"
_FIT_COLOR = "#c44e52"


def vehicle_color(index: int) -> tuple:
    """Line color for 1-based vehicle ``index``; stable across figures."""
    if index < 1:
        raise ValueError(f"vehicle index must be >= 1, got {index}")
    return _PALETTE[(index - 1) % len(_PALETTE)]


def _resolve_out(out_path: Path | str) -> Path:
    out = Path(out_path)
    if out.suffix == "":
        out = out.with_suffix(".svg")
    return out


def _save(fig, out: Path, dpi: int) -> Path:
    if out.parent != Path(""):
        out.parent.mkdir(parents=True, exist_ok=True)
    metadata = {"Date": None} if out.suffix == ".svg" else None
    fig.savefig(out, dpi=dpi, metadata=metadata)
    plt.close(fig)
    return out


def render_trajectory(run_dir: Path | str, kind: str,
                      out_path: Path | str, dpi: int = 150) -> Path:
    """Render the two-panel per-vehicle trace figure for ``kind``.

    Returns the path written.  Raises :class:`RunDataError` before any
    file is created if the trajectory is missing, empty, or off-schema.
    """
    if kind not in TRAJECTORY_KINDS:
        raise RunDataError(f"kind '{kind}' does not use trajectory.csv")
    table = load_trajectory(run_dir)
    out = _resolve_out(out_path)

    fig, (ax_s, ax_v) = plt.subplots(2, 1, sharex=True, figsize=(8.0, 6.0))
    for i in range(1, table.n + 1):
        color = vehicle_color(i)
        ax_s.plot(table.times, table.spacings[:, i - 1], color=color,
                  linewidth=0.9, label=f"car {i}")
        ax_v.plot(table.times, table.velocities[:, i - 1], color=color,
                  linewidth=0.9)
    ax_s.set_ylabel("spacing deviation [m]")
    ax_v.set_ylabel("velocity deviation [m/s]")
    ax_v.set_xlabel("time [s]")
    ax_s.set_title(_TITLES[kind])
    if table.times[-1] > table.times[0]:
        ax_s.set_xlim(float(table.times[0]), float(table.times[-1]))
    if table.n <= 12:
        ax_s.legend(ncol=5, fontsize=8, frameon=False)
    fig.tight_layout()
    return _save(fig, out, dpi)


@dataclass(frozen=True)
class VarianceFigure:
    """What :func:`render_variance` drew, for callers that want numbers."""

    path: Path
    fitted_slope: float
    fitted_intercept: float
    predicted_slope: float
    n_runs: int


def predicted_growth_rate(n: int, sigmas) -> float:
    """Diffusive growth rate of the summed-spacing mode variance.

    Independent white velocity-noise channels add: a channel of strength
    ``sigma`` contributes ``sigma**2 / n`` per second on an ``n``-vehicle
    ring.  Acceleration noise is excluded — it never moves the
    summed-spacing mode, which stays conserved.
    """
    if n < 1:
        raise ValueError(f"ring size must be >= 1, got {n}")
    return float(sum(float(s) ** 2 for s in sigmas) / n)


def render_variance(run_dir: Path | str, out_path: Path | str,
                    dpi: int = 150) -> VarianceFigure:
    """Render the variance-growth figure with its analytic overlay.

    The overlay slope comes from ``config.resolved`` (ring size and the
    velocity-noise strength of the single disturbed channel); the legend
    quotes a least-squares fit over the whole window and, when the
    prediction is nonzero, the relative error of the fit against it.
    Refuses runs with fewer than 10 time points.
    """
    run_dir = Path(run_dir)
    table = load_variance(run_dir)
    if table.times.size < 10:
        raise RunDataError(
            f"variance.csv has only {table.times.size} time points; "
            "at least 10 are needed for a growth fit")
    cfg = load_config(run_dir)
    channels = [cfg.sigma_v] if cfg.sigma_v != 0.0 else []
    predicted = predicted_growth_rate(cfg.n, channels)
    slope, intercept = (float(c) for c in
                        np.polyfit(table.times, table.variance, 1))
    out = _resolve_out(out_path)

    fig, ax = plt.subplots(figsize=(7.0, 4.5))
    step = max(1, table.times.size // 200)
    ax.scatter(table.times[::step], table.variance[::step], s=8,
               color=_SCATTER_COLOR, alpha=0.7,
               label=f"Monte Carlo estimate ({table.n_runs} runs)")
    ends = np.array([table.times[0], table.times[-1]])
    ax.plot(ends, predicted * ends, color="black", linewidth=1.2,
            label=f"predicted rate {predicted:.4f} m^2/s")
    if predicted != 0.0:
        rel = (slope - predicted) / predicted
        fit_label = (f"fitted rate {slope:.4f} m^2/s "
                     f"({rel:+.1%} vs predicted)")
    else:
        fit_label = f"fitted rate {slope:.4f} m^2/s"
    ax.plot(ends, slope * ends + intercept, color=_FIT_COLOR, linewidth=1.2,
            linestyle="--", label=fit_label)
    ax.set_xlabel("time [s]")
    ax.set_ylabel("mode variance [m^2]")
    ax.set_title(_TITLES["variance-growth"])
    ax.legend(frameon=False, fontsize=9)
    fig.tight_layout()
    path = _save(fig, out, dpi)
    return VarianceFigure(path=path, fitted_slope=slope,
                          fitted_intercept=intercept,
                          predicted_slope=predicted, n_runs=table.n_runs)
