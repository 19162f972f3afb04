"""Shared fixtures: the reference parameter set and its assembled model."""

import numpy as np
import pytest

import ringtraffic as rt

#: Reference parameters used by most tests (same set as the CLI's
#: `paper-table1` preset): alpha=0.6, beta=0.9, ramp 5..35 m, v_max=30,
#: equilibrium spacing 20 m, ring of 10 cars.
REF = dict(alpha=0.6, beta=0.9, s_st=5.0, s_go=35.0, v_max=30.0)
S_STAR = 20.0
N_REF = 10


@pytest.fixture(scope="session")
def ref_params():
    return rt.OvmParams(**REF)


@pytest.fixture(scope="session")
def ref_equilibrium(ref_params):
    return rt.equilibrium_from_spacing(ref_params, S_STAR)


@pytest.fixture(scope="session")
def ref_coeffs(ref_params, ref_equilibrium):
    return rt.linearize(ref_params, ref_equilibrium)


@pytest.fixture(scope="session")
def ref_model(ref_coeffs):
    return rt.assemble(rt.RingSpec(n=N_REF, s_star=S_STAR, coeffs=ref_coeffs))


@pytest.fixture(scope="session")
def stabilizing_gains():
    """Unit-magnitude stabilizing feedback (all ten weights -1)."""
    return rt.ControllerGains.uniform(-1.0)


@pytest.fixture(scope="session")
def wiener_mc(ref_model, stabilizing_gains):
    """1000-run batch of the velocity-noise scenario (car 5, sigma=1,
    T=50, dt=0.01, seed 3).  Shared session-wide: the statistics tests
    and the acceptance checks read the same summary."""
    dist = rt.DisturbanceSpec.velocity(N_REF, 5, 1.0, seed=3)
    return rt.monte_carlo_mode_variance(
        ref_model, stabilizing_gains, np.zeros(2 * N_REF), 50.0, 0.01,
        dist, runs=1000,
    )


def model_for(coeffs, n):
    return rt.assemble(rt.RingSpec(n=n, s_star=S_STAR, coeffs=coeffs))


def ols_line(t, y):
    """Least-squares slope/intercept of y against t."""
    slope, intercept = np.polyfit(t, y, 1)
    return float(slope), float(intercept)
