"""Figure rendering for ring-road simulation run directories."""

from .figures import (FIGURE_KINDS, TRAJECTORY_KINDS, VarianceFigure,
                      predicted_growth_rate, render_trajectory,
                      render_variance, vehicle_color)
from .runs import (VARIANCE_SCHEMA, RunConfig, RunDataError, TrajectoryTable,
                   VarianceTable, load_config, load_trajectory, load_variance,
                   trajectory_schema)

__all__ = [
    "FIGURE_KINDS",
    "TRAJECTORY_KINDS",
    "VARIANCE_SCHEMA",
    "RunConfig",
    "RunDataError",
    "TrajectoryTable",
    "VarianceFigure",
    "VarianceTable",
    "load_config",
    "load_trajectory",
    "load_variance",
    "predicted_growth_rate",
    "render_trajectory",
    "render_variance",
    "trajectory_schema",
    "vehicle_color",
]

__version__ = "0.1.0"
