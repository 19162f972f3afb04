"""Command-line front end: scenario runs, analysis reports, sweeps.

Scenarios are declared by a small INI config (flat sections, key = value)
and/or CLI flags; flags win over the file, the file wins over the chosen
preset.  Every invocation writes a self-describing output directory:

    config.resolved   the fully resolved configuration, rerunnable
    trajectory.csv    one recorded run (`run` verb)
    analysis.txt      controllability + first-mode report
    variance.csv      Monte Carlo mode statistics (when runs are set)
    sweep.csv         one row per swept value (`sweep` verb)

Exit codes: 0 success, 2 configuration/analysis error, 3 numerical
divergence or physically impossible state.
"""

from __future__ import annotations

import argparse
import configparser
import os
import sys
from dataclasses import dataclass, replace
from typing import Optional

import numpy as np

from .controllability import analyze as controllability_analyze
from .controllability import pbh_test, render_report, write_pbh_csv
from .errors import (AnalysisError, ConfigurationError, DivergenceError,
                     PhysicalViolationError)
from .ovm import LinearCoeffs, OvmParams, equilibrium_from_spacing, linearize
from .ring import RingSpec, assemble, export_model
from .simulate import (ControllerGains, DisturbanceSpec, Trajectory,
                       conservation_residual, monte_carlo_mode_variance,
                       simulate, write_trajectory_csv, write_variance_csv)
from .spectral import (block_diagonalize, first_mode,
                       write_modal_eigenvalues_csv)

SCENARIOS = ("free", "accel-noise", "vel-noise")
SWEEP_PARAMS = ("n", "alpha", "beta", "sigma_v", "sigma_a", "dt")

#: Reference parameter set used throughout the bundled experiments.
PRESETS = {
    "paper-table1": dict(
        n=10, s_star=20.0, alpha=0.6, beta=0.9, s_st=5.0, s_go=35.0,
        v_max=30.0, vehicle=5, seed=42,
    ),
}

#: Default feedback: unit-magnitude stabilizing weights on cars 1..5.
DEFAULT_WEIGHT = -1.0


@dataclass(frozen=True)
class ScenarioConfig:
    """Fully resolved description of one experiment."""

    n: int = 10
    s_star: float = 20.0
    alpha: float = 0.6
    beta: float = 0.9
    s_st: float = 5.0
    s_go: float = 35.0
    v_max: float = 30.0
    alpha1_override: Optional[float] = None
    scenario: str = "free"
    vehicle: int = 5
    kick: float = 1.0
    sigma_v: Optional[float] = None
    sigma_a: Optional[float] = None
    noise_mode: str = "white"
    spacing_weights: tuple = (DEFAULT_WEIGHT,) * 5
    velocity_weights: tuple = (DEFAULT_WEIGHT,) * 5
    controller_window: str = "literal"
    T: Optional[float] = None
    dt: float = 0.01
    runs: Optional[int] = None
    seed: int = 42

    def resolved_sigma_v(self) -> float:
        if self.sigma_v is not None:
            return self.sigma_v
        return 1.0 if self.scenario == "vel-noise" else 0.0

    def resolved_sigma_a(self) -> float:
        if self.sigma_a is not None:
            return self.sigma_a
        return 1.0 if self.scenario == "accel-noise" else 0.0

    def resolved_duration(self) -> float:
        if self.T is not None:
            return self.T
        return 60.0 if self.scenario == "free" else 50.0

    def control_active(self) -> bool:
        return self.n >= 5


def _build_model(cfg: ScenarioConfig):
    params = OvmParams(alpha=cfg.alpha, beta=cfg.beta, s_st=cfg.s_st,
                       s_go=cfg.s_go, v_max=cfg.v_max)
    eq = equilibrium_from_spacing(params, cfg.s_star)
    coeffs = linearize(params, eq)
    if cfg.alpha1_override is not None:
        coeffs = LinearCoeffs(alpha1=cfg.alpha1_override,
                              alpha2=coeffs.alpha2, alpha3=coeffs.alpha3)
    spec = RingSpec(n=cfg.n, s_star=cfg.s_star, coeffs=coeffs)
    return params, eq, assemble(spec)


def _gains(cfg: ScenarioConfig) -> Optional[ControllerGains]:
    # Rings smaller than the five-car gain horizon run without feedback;
    # the mode statistics the experiments target are control-invariant.
    if not cfg.control_active():
        return None
    return ControllerGains(spacing_weights=cfg.spacing_weights,
                           velocity_weights=cfg.velocity_weights,
                           window=cfg.controller_window)


def _disturbance(cfg: ScenarioConfig) -> DisturbanceSpec:
    car = min(cfg.vehicle, cfg.n)
    sv = [0.0] * cfg.n
    sa = [0.0] * cfg.n
    sv[car - 1] = cfg.resolved_sigma_v()
    sa[car - 1] = cfg.resolved_sigma_a()
    return DisturbanceSpec(sigma_v=tuple(sv), sigma_a=tuple(sa),
                           mode=cfg.noise_mode, seed=cfg.seed)


def _initial_state(cfg: ScenarioConfig) -> np.ndarray:
    x0 = np.zeros(2 * cfg.n)
    if cfg.scenario == "free":
        car = min(cfg.vehicle, cfg.n)
        x0[2 * (car - 1) + 1] = cfg.kick
    return x0


# ---------------------------------------------------------------------------
# config file <-> ScenarioConfig

_SCHEMA = {
    "ring": {"n": int, "s_star": float, "alpha": float, "beta": float,
             "s_st": float, "s_go": float, "v_max": float,
             "alpha1_override": float},
    "scenario": {"kind": str, "vehicle": int, "kick": float,
                 "sigma_v": float, "sigma_a": float, "noise_mode": str},
    "control": {"spacing_weights": str, "velocity_weights": str,
                "window": str},
    "integration": {"T": float, "dt": float},
    "monte_carlo": {"runs": int},
    "output": {"seed": int},
}

_KEY_MAP = {
    ("ring", "n"): "n", ("ring", "s_star"): "s_star",
    ("ring", "alpha"): "alpha", ("ring", "beta"): "beta",
    ("ring", "s_st"): "s_st", ("ring", "s_go"): "s_go",
    ("ring", "v_max"): "v_max",
    ("ring", "alpha1_override"): "alpha1_override",
    ("scenario", "kind"): "scenario", ("scenario", "vehicle"): "vehicle",
    ("scenario", "kick"): "kick", ("scenario", "sigma_v"): "sigma_v",
    ("scenario", "sigma_a"): "sigma_a",
    ("scenario", "noise_mode"): "noise_mode",
    ("control", "spacing_weights"): "spacing_weights",
    ("control", "velocity_weights"): "velocity_weights",
    ("control", "window"): "controller_window",
    ("integration", "T"): "T", ("integration", "dt"): "dt",
    ("monte_carlo", "runs"): "runs", ("output", "seed"): "seed",
}


def _parse_weights(text: str, where: str) -> tuple:
    try:
        vals = tuple(float(v) for v in text.split(","))
    except ValueError:
        raise ConfigurationError(f"{where}: cannot parse weights {text!r}") from None
    if len(vals) != 5:
        raise ConfigurationError(f"{where}: need exactly 5 weights, got {len(vals)}")
    return vals


def load_config_file(path: str) -> dict:
    """Read an INI scenario file into ScenarioConfig keyword overrides."""
    parser = configparser.ConfigParser()
    parser.optionxform = str  # keep key case (T vs t)
    try:
        with open(path) as fh:
            parser.read_file(fh)
    except OSError as err:
        raise ConfigurationError(f"cannot read config file: {err}") from None
    except configparser.Error as err:
        raise ConfigurationError(f"malformed config file {path}: {err}") from None

    overrides = {}
    for section in parser.sections():
        if section not in _SCHEMA:
            raise ConfigurationError(f"{path}: unknown section [{section}]")
        for key, raw in parser.items(section):
            if key not in _SCHEMA[section]:
                raise ConfigurationError(
                    f"{path}: unknown key {key!r} in section [{section}]"
                )
            where = f"{path} [{section}] {key}"
            if key in ("spacing_weights", "velocity_weights"):
                value = _parse_weights(raw, where)
            else:
                caster = _SCHEMA[section][key]
                try:
                    value = caster(raw)
                except ValueError:
                    raise ConfigurationError(
                        f"{where}: cannot parse {raw!r} as {caster.__name__}"
                    ) from None
            overrides[_KEY_MAP[(section, key)]] = value
    return overrides


def write_resolved_config(path: str, cfg: ScenarioConfig) -> None:
    """Persist the fully resolved scenario; rerunning from this file
    with the same seed reproduces every CSV byte for byte."""
    parser = configparser.ConfigParser()
    parser.optionxform = str  # keep key case (T vs t)
    parser["ring"] = {
        "n": str(cfg.n), "s_star": repr(cfg.s_star),
        "alpha": repr(cfg.alpha), "beta": repr(cfg.beta),
        "s_st": repr(cfg.s_st), "s_go": repr(cfg.s_go),
        "v_max": repr(cfg.v_max),
    }
    if cfg.alpha1_override is not None:
        parser["ring"]["alpha1_override"] = repr(cfg.alpha1_override)
    parser["scenario"] = {
        "kind": cfg.scenario, "vehicle": str(cfg.vehicle),
        "kick": repr(cfg.kick),
        "sigma_v": repr(cfg.resolved_sigma_v()),
        "sigma_a": repr(cfg.resolved_sigma_a()),
        "noise_mode": cfg.noise_mode,
    }
    parser["control"] = {
        "spacing_weights": ",".join(repr(w) for w in cfg.spacing_weights),
        "velocity_weights": ",".join(repr(w) for w in cfg.velocity_weights),
        "window": cfg.controller_window,
    }
    parser["integration"] = {"T": repr(cfg.resolved_duration()),
                             "dt": repr(cfg.dt)}
    if cfg.runs is not None:
        parser["monte_carlo"] = {"runs": str(cfg.runs)}
    parser["output"] = {"seed": str(cfg.seed)}
    with open(path, "w") as fh:
        parser.write(fh)


# ---------------------------------------------------------------------------
# verbs

def _report_text(cfg: ScenarioConfig, model, traj: Optional[Trajectory]) -> str:
    report = controllability_analyze(model.a_circ, model.b)
    mode = first_mode(model)
    c = model.coeffs
    lines = [
        "# ring",
        f"n = {model.n}",
        f"s_star = {cfg.s_star!r}",
        f"alpha1 = {c.alpha1!r}",
        f"alpha2 = {c.alpha2!r}",
        f"alpha3 = {c.alpha3!r}",
        f"degeneracy = {c.degeneracy!r}",
        "",
        "# controllability (circulant form)",
        render_report(report).rstrip("\n"),
        "",
        "# first mode",
        f"eigenvalue_1 = {float(mode.eigenvalues[0].real)!r}",
        f"eigenvalue_2 = {float(mode.eigenvalues[1].real)!r}",
        f"input_gain = {float(mode.b_mode[1])!r}",
        f"disturbance_gain = {float(mode.dist_gain)!r}",
    ]
    if traj is not None:
        drift = float(np.max(np.abs(traj.mode_signal - traj.mode_signal[0])))
        lines += [
            "",
            "# trajectory",
            f"max_excursion = {float(np.max(np.abs(traj.states)))!r}",
            f"mode_signal_drift = {drift!r}",
            f"mode_signal_flat = {str(drift <= 1e-8).lower()}",
            f"conservation_residual = {conservation_residual(traj)!r}",
        ]
    return "\n".join(lines) + "\n"


def _cmd_run(cfg: ScenarioConfig, out_dir: str) -> int:
    _, _, model = _build_model(cfg)
    gains = _gains(cfg)
    dist = _disturbance(cfg)
    x0 = _initial_state(cfg)
    duration = cfg.resolved_duration()

    traj = simulate(model, gains, x0, duration, cfg.dt,
                    dist=dist if dist.active else None, run_index=0)

    os.makedirs(out_dir, exist_ok=True)
    write_resolved_config(os.path.join(out_dir, "config.resolved"), cfg)
    write_trajectory_csv(os.path.join(out_dir, "trajectory.csv"), traj)
    with open(os.path.join(out_dir, "analysis.txt"), "w") as fh:
        fh.write(_report_text(cfg, model, traj))

    if cfg.runs is not None:
        summary = monte_carlo_mode_variance(model, gains, x0, duration,
                                            cfg.dt, dist, cfg.runs)
        write_variance_csv(os.path.join(out_dir, "variance.csv"), summary)
    return 0


def _cmd_analyze(cfg: ScenarioConfig, out_dir: str) -> int:
    _, _, model = _build_model(cfg)
    os.makedirs(out_dir, exist_ok=True)
    write_resolved_config(os.path.join(out_dir, "config.resolved"), cfg)
    with open(os.path.join(out_dir, "analysis.txt"), "w") as fh:
        fh.write(_report_text(cfg, model, None))
    write_pbh_csv(os.path.join(out_dir, "eigenvalues.csv"),
                  pbh_test(model.a_circ, model.b))
    write_modal_eigenvalues_csv(os.path.join(out_dir, "modal_eigenvalues.csv"),
                                block_diagonalize(model))
    export_model(model, out_dir)
    return 0


def _sweep_value_config(cfg: ScenarioConfig, param: str, value: float) -> ScenarioConfig:
    if param == "n":
        return replace(cfg, n=int(value))
    if param == "alpha":
        return replace(cfg, alpha=value)
    if param == "beta":
        return replace(cfg, beta=value)
    if param == "sigma_v":
        return replace(cfg, sigma_v=value)
    if param == "sigma_a":
        return replace(cfg, sigma_a=value)
    if param == "dt":
        return replace(cfg, dt=value)
    raise ConfigurationError(f"unknown sweep parameter {param!r}")


def _cmd_sweep(cfg: ScenarioConfig, out_dir: str, param: str, values) -> int:
    os.makedirs(out_dir, exist_ok=True)
    write_resolved_config(os.path.join(out_dir, "config.resolved"), cfg)
    runs = cfg.runs if cfg.runs is not None else 200
    rows = []
    for value in values:
        sub = _sweep_value_config(cfg, param, value)
        try:
            _, _, model = _build_model(sub)
            gains = _gains(sub)
            dist = _disturbance(sub)
            x0 = _initial_state(sub)
            duration = sub.resolved_duration()
            traj = simulate(model, gains, x0, duration, sub.dt,
                            dist=dist if dist.active else None, run_index=0)
            summary = monte_carlo_mode_variance(model, gains, x0, duration,
                                                sub.dt, dist, runs)
            rows.append((value, runs, float(summary.var_x11[-1]),
                         summary.msq_rate,
                         float(np.max(np.abs(traj.states))),
                         conservation_residual(traj), "ok"))
        except (ConfigurationError, AnalysisError, DivergenceError,
                PhysicalViolationError) as err:
            rows.append((value, runs, float("nan"), float("nan"),
                         float("nan"), float("nan"),
                         str(err).replace(",", ";")))
    with open(os.path.join(out_dir, "sweep.csv"), "w") as fh:
        fh.write("param, value, n_runs, terminal_var_x11, var_slope, "
                 "max_excursion, conservation_residual, status\n")
        for value, r, term, slope, exc, cons, status in rows:
            fh.write(f"{param},{value:.16e},{r},{term:.16e},{slope:.16e},"
                     f"{exc:.16e},{cons:.16e},{status}\n")
    return 0


# ---------------------------------------------------------------------------
# argument parsing

def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--preset", choices=sorted(PRESETS))
    p.add_argument("--config", help="INI scenario file")
    p.add_argument("--n", type=int)
    p.add_argument("--scenario", choices=SCENARIOS)
    p.add_argument("--vehicle", type=int)
    p.add_argument("--sigma-v", type=float, dest="sigma_v")
    p.add_argument("--sigma-a", type=float, dest="sigma_a")
    p.add_argument("--noise-mode", choices=("white", "hold"), dest="noise_mode")
    p.add_argument("--T", type=float, dest="T")
    p.add_argument("--dt", type=float)
    p.add_argument("--runs", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--alpha1-override", type=float, dest="alpha1_override")
    p.add_argument("--controller-window", choices=("literal", "preceding"),
                   dest="controller_window")
    p.add_argument("--out", required=True, help="output directory")


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ringtraffic",
        description="Ring-road traffic experiments: simulate, analyze, sweep.",
    )
    sub = parser.add_subparsers(dest="verb", required=True)
    for verb, help_ in (("run", "simulate one scenario and write its artifacts"),
                        ("analyze", "write controllability and modal reports"),
                        ("sweep", "repeat a scenario over a parameter range")):
        p = sub.add_parser(verb, help=help_)
        _add_common(p)
        if verb == "sweep":
            p.add_argument("--param", required=True, choices=SWEEP_PARAMS)
            p.add_argument("--values", required=True,
                           help="comma-separated values, e.g. 4,6,8,10")
    return parser


def _resolve_config(args: argparse.Namespace) -> ScenarioConfig:
    overrides: dict = {}
    if args.preset:
        overrides.update(PRESETS[args.preset])
    if args.config:
        overrides.update(load_config_file(args.config))
    for key in ("n", "scenario", "vehicle", "sigma_v", "sigma_a", "noise_mode",
                "T", "dt", "runs", "seed", "alpha1_override",
                "controller_window"):
        value = getattr(args, key, None)
        if value is not None:
            overrides[key] = value
    cfg = ScenarioConfig(**overrides)
    if not 1 <= cfg.vehicle:
        raise ConfigurationError(f"vehicle index must be >= 1, got {cfg.vehicle}")
    if cfg.scenario not in SCENARIOS:
        raise ConfigurationError(f"unknown scenario {cfg.scenario!r}")
    if cfg.vehicle > cfg.n and args.verb != "analyze":
        # analyze never touches the disturbed car; sweep sub-runs that
        # shrink the ring below it clamp instead (see _disturbance).  A
        # direct request to disturb a car outside the ring is an error.
        raise ConfigurationError(
            f"vehicle {cfg.vehicle} does not exist on a ring of {cfg.n} cars"
        )
    return cfg


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        cfg = _resolve_config(args)
        if args.verb == "run":
            return _cmd_run(cfg, args.out)
        if args.verb == "analyze":
            return _cmd_analyze(cfg, args.out)
        values = []
        for tok in args.values.split(","):
            try:
                values.append(float(tok))
            except ValueError:
                raise ConfigurationError(
                    f"--values: cannot parse {tok!r} as a number"
                ) from None
        return _cmd_sweep(cfg, args.out, args.param, values)
    except (ConfigurationError, AnalysisError) as err:
        print(f"configuration error: {err}", file=sys.stderr)
        return 2
    except (DivergenceError, PhysicalViolationError) as err:
        print(f"numerical failure: {err}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
