"""End-to-end checks of the command-line front end.

Everything drives ``ringtraffic.cli.main`` in process (plus one smoke test
of the installed console script) and inspects the artifact directories it
writes.
"""

import configparser
import math
import shutil
import subprocess

import numpy as np
import pytest

from ringtraffic.cli import main
from ringtraffic.simulate import read_trajectory_csv, read_variance_csv


def run_cli(*argv):
    return main([str(a) for a in argv])


def report_fields(path):
    """Parse the ``key = value`` lines of an analysis.txt into a dict."""
    fields = {}
    for line in path.read_text().splitlines():
        if " = " in line:
            key, _, value = line.partition(" = ")
            fields[key.strip()] = value.strip()
    return fields


def read_resolved(path):
    parser = configparser.ConfigParser()
    parser.optionxform = str
    with open(path) as fh:
        parser.read_file(fh)
    return parser


def read_sweep(path):
    with open(path) as fh:
        header = fh.readline().rstrip("\n")
        rows = [line.rstrip("\n").split(",") for line in fh if line.strip()]
    return header, rows


# ---------------------------------------------------------------------------
# run verb

def test_free_preset_run_decays(tmp_path):
    out = tmp_path / "free"
    assert run_cli("run", "--preset", "paper-table1", "--out", out) == 0
    assert sorted(p.name for p in out.iterdir()) == [
        "analysis.txt", "config.resolved", "trajectory.csv",
    ]
    traj = read_trajectory_csv(str(out / "trajectory.csv"))
    assert traj.n == 10
    assert traj.states[0, 9] == 1.0  # velocity kick lands on car 5
    assert np.count_nonzero(traj.states[0]) == 1
    assert traj.times[-1] == 60.0
    assert np.max(np.abs(traj.states[-1])) <= 0.05


def test_accel_noise_mode_stays_flat(tmp_path):
    out = tmp_path / "acc"
    assert run_cli("run", "--preset", "paper-table1",
                   "--scenario", "accel-noise", "--out", out) == 0
    fields = report_fields(out / "analysis.txt")
    assert fields["mode_signal_flat"] == "true"
    assert float(fields["mode_signal_drift"]) <= 1e-8
    assert float(fields["conservation_residual"]) <= 1e-8


def test_velocity_noise_moves_the_mode(tmp_path):
    out = tmp_path / "vel"
    assert run_cli("run", "--preset", "paper-table1",
                   "--scenario", "vel-noise", "--out", out) == 0
    fields = report_fields(out / "analysis.txt")
    assert fields["mode_signal_flat"] == "false"
    assert float(fields["mode_signal_drift"]) > 1e-2


def test_monte_carlo_run_writes_variance_csv(tmp_path):
    out = tmp_path / "mc"
    assert run_cli("run", "--preset", "paper-table1", "--scenario", "vel-noise",
                   "--runs", 40, "--T", 10, "--out", out) == 0
    summary = read_variance_csv(str(out / "variance.csv"))
    assert summary.n_runs == 40
    assert summary.times[-1] == 10.0
    assert summary.var_x11[-1] > summary.var_x11[0]


def test_thousand_run_variance_recovers_diffusive_growth(tmp_path, wiener_mc):
    out = tmp_path / "mc1000"
    assert run_cli("run", "--preset", "paper-table1", "--scenario", "vel-noise",
                   "--runs", 1000, "--seed", 3, "--out", out) == 0
    summary = read_variance_csv(str(out / "variance.csv"))
    # Same seed and scenario as the library-level batch: bit-identical.
    assert np.array_equal(summary.var_x11, wiener_mc.var_x11)
    late = summary.times >= 5.0
    slope, icpt = np.polyfit(summary.times[late], summary.var_x11[late], 1)
    assert abs(slope - 0.1) <= 0.01
    assert abs(icpt) <= 0.334


def test_config_file_drives_a_run(tmp_path):
    cfgfile = tmp_path / "scenario.ini"
    cfgfile.write_text(
        "[ring]\nn = 6\n"
        "[scenario]\nkind = free\nvehicle = 3\nkick = 0.5\n"
        "[integration]\nT = 5.0\n"
    )
    out = tmp_path / "out"
    assert run_cli("run", "--config", cfgfile, "--out", out) == 0
    traj = read_trajectory_csv(str(out / "trajectory.csv"))
    assert traj.n == 6
    assert traj.states[0, 5] == 0.5  # index 2*(3-1)+1
    assert traj.times[-1] == 5.0


def test_flags_override_config_file(tmp_path):
    cfgfile = tmp_path / "scenario.ini"
    cfgfile.write_text(
        "[ring]\nn = 6\n"
        "[scenario]\nkind = free\nvehicle = 3\nkick = 0.5\n"
        "[integration]\nT = 5.0\n"
    )
    out = tmp_path / "out"
    assert run_cli("run", "--config", cfgfile, "--vehicle", 2, "--out", out) == 0
    traj = read_trajectory_csv(str(out / "trajectory.csv"))
    assert traj.states[0, 3] == 0.5
    assert traj.states[0, 5] == 0.0


def test_preceding_window_flag_is_honored(tmp_path):
    out = tmp_path / "win"
    assert run_cli("run", "--preset", "paper-table1", "--T", 5,
                   "--controller-window", "preceding", "--out", out) == 0
    resolved = read_resolved(out / "config.resolved")
    assert resolved["control"]["window"] == "preceding"


# ---------------------------------------------------------------------------
# reproducibility

def test_identical_invocations_are_byte_identical(tmp_path):
    def argv(out):
        return ("run", "--preset", "paper-table1", "--scenario", "vel-noise",
                "--T", 10, "--runs", 25, "--out", out)

    assert run_cli(*argv(tmp_path / "a")) == 0
    assert run_cli(*argv(tmp_path / "b")) == 0
    for name in ("config.resolved", "trajectory.csv", "analysis.txt",
                 "variance.csv"):
        assert (tmp_path / "a" / name).read_bytes() == \
               (tmp_path / "b" / name).read_bytes()


def test_resolved_config_reruns_byte_identical(tmp_path):
    first = tmp_path / "first"
    second = tmp_path / "second"
    assert run_cli("run", "--preset", "paper-table1", "--scenario", "vel-noise",
                   "--T", 10, "--out", first) == 0
    assert run_cli("run", "--config", first / "config.resolved",
                   "--out", second) == 0
    for name in ("config.resolved", "trajectory.csv", "analysis.txt"):
        assert (first / name).read_bytes() == (second / name).read_bytes()


def test_preset_values_echo_into_resolved_config(tmp_path):
    out = tmp_path / "echo"
    assert run_cli("analyze", "--preset", "paper-table1", "--out", out) == 0
    resolved = read_resolved(out / "config.resolved")
    assert resolved["ring"]["n"] == "10"
    assert resolved["ring"]["alpha"] == "0.6"
    assert resolved["ring"]["beta"] == "0.9"
    assert resolved["ring"]["s_star"] == "20.0"
    assert resolved["scenario"]["vehicle"] == "5"
    assert resolved["scenario"]["sigma_v"] == "0.0"
    assert resolved["integration"]["T"] == "60.0"
    assert resolved["output"]["seed"] == "42"


# ---------------------------------------------------------------------------
# analyze verb

def test_analyze_writes_the_report_bundle(tmp_path, ref_model):
    out = tmp_path / "an"
    assert run_cli("analyze", "--preset", "paper-table1", "--out", out) == 0
    assert sorted(p.name for p in out.iterdir()) == [
        "a_circ.csv", "a_open.csv", "analysis.txt", "b.csv",
        "config.resolved", "eigenvalues.csv", "modal_eigenvalues.csv",
    ]
    fields = report_fields(out / "analysis.txt")
    assert fields["state_dim"] == "20"
    assert fields["kalman_rank"] == "19"
    assert fields["pbh_rank"] == "19"
    assert fields["uncontrollable_count"] == "1"
    assert fields["stabilizable"] == "False"
    assert fields["eigenvalue_1"] == "0.0"
    assert float(fields["eigenvalue_2"]) == pytest.approx(-0.6, abs=1e-12)

    a_open = np.loadtxt(out / "a_open.csv", delimiter=",", ndmin=2)
    a_circ = np.loadtxt(out / "a_circ.csv", delimiter=",", ndmin=2)
    b = np.loadtxt(out / "b.csv", delimiter=",", ndmin=2)
    assert np.array_equal(a_open, ref_model.a_open)
    assert np.array_equal(a_circ, ref_model.a_circ)
    assert np.array_equal(b, ref_model.b)

    pbh = np.loadtxt(out / "eigenvalues.csv", delimiter=",", skiprows=1,
                     ndmin=2)
    flagged = pbh[pbh[:, 3] == 0.0]
    assert flagged.shape[0] == 1
    assert abs(complex(flagged[0, 0], flagged[0, 1])) <= 1e-8

    modal = np.loadtxt(out / "modal_eigenvalues.csv", delimiter=",",
                       skiprows=1, ndmin=2)
    assert modal.shape == (10, 5)


def test_analyze_handles_two_car_ring(tmp_path):
    out = tmp_path / "n2"
    # vehicle 5 from the preset is fine here: analyze never disturbs a car.
    assert run_cli("analyze", "--preset", "paper-table1", "--n", 2,
                   "--out", out) == 0
    fields = report_fields(out / "analysis.txt")
    assert fields["state_dim"] == "4"
    assert fields["kalman_rank"] == "3"
    assert fields["uncontrollable_count"] == "1"


def test_alpha1_override_reaches_the_model(tmp_path):
    out = tmp_path / "ov"
    assert run_cli("analyze", "--preset", "paper-table1",
                   "--alpha1-override", 1.5708, "--out", out) == 0
    fields = report_fields(out / "analysis.txt")
    assert fields["alpha1"] == "1.5708"
    resolved = read_resolved(out / "config.resolved")
    assert resolved["ring"]["alpha1_override"] == "1.5708"


# ---------------------------------------------------------------------------
# sweep verb

def test_sweep_over_ring_size_follows_inverse_law(tmp_path):
    out = tmp_path / "sw_n"
    assert run_cli("sweep", "--preset", "paper-table1", "--scenario",
                   "vel-noise", "--T", 20, "--runs", 200, "--param", "n",
                   "--values", "4,6,8,10", "--out", out) == 0
    header, rows = read_sweep(out / "sweep.csv")
    assert header == ("param, value, n_runs, terminal_var_x11, var_slope, "
                      "max_excursion, conservation_residual, status")
    assert [row[0] for row in rows] == ["n"] * 4
    assert all(row[7] == "ok" for row in rows)
    assert [int(row[2]) for row in rows] == [200] * 4
    slopes = [float(row[4]) for row in rows]
    for slope, n in zip(slopes, (4, 6, 8, 10)):
        assert abs(slope - 1.0 / n) <= 0.05 / n  # unit noise spread over n cars
    assert slopes == sorted(slopes, reverse=True)


def test_sweep_zero_noise_yields_quiet_row(tmp_path):
    out = tmp_path / "sw_s"
    assert run_cli("sweep", "--preset", "paper-table1", "--scenario",
                   "vel-noise", "--T", 5, "--runs", 5, "--param", "sigma_v",
                   "--values", "0", "--out", out) == 0
    _, rows = read_sweep(out / "sweep.csv")
    assert len(rows) == 1
    row = rows[0]
    assert row[7] == "ok"
    assert float(row[3]) == 0.0  # terminal variance
    assert float(row[4]) == 0.0  # slope
    assert float(row[5]) == 0.0  # max excursion
    assert float(row[6]) == 0.0  # conservation residual


def test_sweep_step_size_leaves_slope_alone(tmp_path):
    out = tmp_path / "sw_dt"
    assert run_cli("sweep", "--preset", "paper-table1", "--scenario",
                   "vel-noise", "--T", 20, "--runs", 200, "--param", "dt",
                   "--values", "0.01,0.005", "--out", out) == 0
    _, rows = read_sweep(out / "sweep.csv")
    assert all(row[7] == "ok" for row in rows)
    coarse, fine = (float(row[4]) for row in rows)
    assert abs(coarse - fine) / coarse <= 0.05


def test_sweep_records_failures_and_presses_on(tmp_path):
    out = tmp_path / "sw_a"
    assert run_cli("sweep", "--preset", "paper-table1", "--scenario",
                   "vel-noise", "--T", 5, "--runs", 2, "--param", "alpha",
                   "--values", "0.6,-0.1", "--out", out) == 0
    _, rows = read_sweep(out / "sweep.csv")
    assert len(rows) == 2
    good, bad = rows
    assert good[7] == "ok"
    assert bad[7] != "ok"
    assert "alpha" in bad[7]
    assert len(bad) == 8  # any commas in the message were replaced
    assert math.isnan(float(bad[3]))
    assert math.isnan(float(bad[5]))


# ---------------------------------------------------------------------------
# failure paths and exit codes

def test_degenerate_override_is_refused(tmp_path, capsys):
    rc = run_cli("run", "--preset", "paper-table1",
                 "--alpha1-override", 0.45, "--out", tmp_path / "x")
    assert rc == 2
    err = capsys.readouterr().err
    assert err.startswith("configuration error:")
    assert "alpha1 - alpha2*alpha3 + alpha3" in err


def test_zero_sensitivity_parameters_rejected(tmp_path, capsys):
    cfgfile = tmp_path / "bad.ini"
    cfgfile.write_text("[ring]\nalpha = 0.0\nbeta = 0.0\n")
    rc = run_cli("run", "--config", cfgfile, "--out", tmp_path / "x")
    assert rc == 2
    err = capsys.readouterr().err
    assert err.startswith("configuration error:")
    assert "alpha" in err


def test_unknown_config_section_is_named(tmp_path, capsys):
    cfgfile = tmp_path / "bad.ini"
    cfgfile.write_text("[plotting]\nstyle = dark\n")
    assert run_cli("run", "--config", cfgfile, "--out", tmp_path / "x") == 2
    assert "unknown section [plotting]" in capsys.readouterr().err


def test_unknown_config_key_is_named(tmp_path, capsys):
    cfgfile = tmp_path / "bad.ini"
    cfgfile.write_text("[ring]\ncolour = red\n")
    assert run_cli("run", "--config", cfgfile, "--out", tmp_path / "x") == 2
    assert "unknown key 'colour' in section [ring]" in capsys.readouterr().err


def test_unparseable_config_value_is_named(tmp_path, capsys):
    cfgfile = tmp_path / "bad.ini"
    cfgfile.write_text("[integration]\ndt = fast\n")
    assert run_cli("run", "--config", cfgfile, "--out", tmp_path / "x") == 2
    assert "cannot parse 'fast' as float" in capsys.readouterr().err


def test_wrong_weight_count_rejected(tmp_path, capsys):
    cfgfile = tmp_path / "bad.ini"
    cfgfile.write_text("[control]\nspacing_weights = -1,-1\n")
    assert run_cli("run", "--config", cfgfile, "--out", tmp_path / "x") == 2
    assert "need exactly 5 weights, got 2" in capsys.readouterr().err


def test_vehicle_outside_ring_rejected_for_runs(tmp_path, capsys):
    rc = run_cli("run", "--n", 4, "--vehicle", 5, "--T", 1,
                 "--out", tmp_path / "x")
    assert rc == 2
    err = capsys.readouterr().err
    assert err.startswith("configuration error:")
    assert "vehicle 5" in err


def test_destabilizing_feedback_reports_numerical_failure(tmp_path, capsys):
    cfgfile = tmp_path / "unstable.ini"
    cfgfile.write_text(
        "[control]\n"
        "spacing_weights = 1,1,1,1,1\n"
        "velocity_weights = 1,1,1,1,1\n"
    )
    rc = run_cli("run", "--preset", "paper-table1", "--config", cfgfile,
                 "--out", tmp_path / "x")
    assert rc == 3
    err = capsys.readouterr().err
    assert err.startswith("numerical failure:")
    assert "step" in err


def test_bad_sweep_values_are_reported(tmp_path, capsys):
    rc = run_cli("sweep", "--preset", "paper-table1", "--param", "n",
                 "--values", "4,six", "--out", tmp_path / "x")
    assert rc == 2
    assert "cannot parse 'six'" in capsys.readouterr().err


def test_missing_out_flag_aborts_parsing():
    with pytest.raises(SystemExit) as exc:
        main(["run", "--preset", "paper-table1"])
    assert exc.value.code == 2


# ---------------------------------------------------------------------------
# installed entry point

def test_installed_console_script(tmp_path):
    exe = shutil.which("ringtraffic")
    assert exe, "console script not found on PATH"
    proc = subprocess.run(
        [exe, "analyze", "--preset", "paper-table1",
         "--out", str(tmp_path / "out")],
        capture_output=True, text=True,
    )
    assert proc.returncode == 0, proc.stderr
    assert (tmp_path / "out" / "analysis.txt").exists()
