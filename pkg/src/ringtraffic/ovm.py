"""Optimal-velocity car-following model.

A driver accelerates toward a spacing-dependent desired velocity and
reacts to the closing speed of the vehicle ahead:

    dv/dt = alpha * (V(s) - v) + beta * ds/dt

V(s) is zero below the stopping spacing ``s_st``, saturates at ``v_max``
above the free-flow spacing ``s_go``, and follows a raised-cosine ramp
in between.  Linearizing about an equilibrium spacing yields the three
coefficients (``alpha1``, ``alpha2``, ``alpha3``) used by the ring
state-space assembly.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import bisect

from .errors import AnalysisError, ConfigurationError

#: Coefficient triples closer to degenerate than this are rejected.
DEGENERACY_TOL = 1e-12


@dataclass(frozen=True)
class OvmParams:
    """Physical car-following parameters.

    alpha   gain on the desired-velocity error [1/s]
    beta    gain on the relative velocity of the car ahead [1/s]
    s_st    spacing at or below which the desired velocity is 0 [m]
    s_go    spacing at or above which it saturates at v_max [m]
    v_max   free-flow velocity [m/s]
    """

    alpha: float
    beta: float
    s_st: float
    s_go: float
    v_max: float

    def __post_init__(self):
        if not (self.alpha > 0 and self.beta > 0):
            raise ConfigurationError(
                f"gains must be positive: alpha={self.alpha}, beta={self.beta}"
            )
        if not (0 < self.s_st < self.s_go):
            raise ConfigurationError(
                f"need 0 < s_st < s_go, got s_st={self.s_st}, s_go={self.s_go}"
            )
        if not self.v_max > 0:
            raise ConfigurationError(f"v_max must be positive, got {self.v_max}")


@dataclass(frozen=True)
class Equilibrium:
    """Uniform-flow operating point: every car at spacing ``s_star``
    moving at ``v_star = V(s_star)``."""

    s_star: float
    v_star: float


@dataclass(frozen=True)
class LinearCoeffs:
    """Linearized driver coefficients.

    alpha1  spacing sensitivity, alpha * dV/ds at the equilibrium [1/s^2]
    alpha2  own-velocity damping, alpha + beta [1/s]
    alpha3  lead-velocity coupling, beta [1/s]
    """

    alpha1: float
    alpha2: float
    alpha3: float

    @property
    def degeneracy(self) -> float:
        """alpha1 - alpha2*alpha3 + alpha3; must stay away from zero for
        the ring decomposition to have its generic mode structure."""
        return self.alpha1 - self.alpha2 * self.alpha3 + self.alpha3

    @property
    def is_degenerate(self) -> bool:
        return abs(self.degeneracy) < DEGENERACY_TOL


def desired_velocity(p: OvmParams, s):
    """Desired velocity V(s); scalar in, scalar out (arrays work too).

    0 for s <= s_st, v_max for s >= s_go, and
    (v_max/2) * (1 - cos(pi (s - s_st)/(s_go - s_st))) between.
    Continuous and monotone nondecreasing.
    """
    s_arr = np.asarray(s, dtype=float)
    ramp = 0.5 * p.v_max * (1.0 - np.cos(np.pi * (s_arr - p.s_st) / (p.s_go - p.s_st)))
    out = np.where(s_arr <= p.s_st, 0.0, np.where(s_arr >= p.s_go, p.v_max, ramp))
    if np.isscalar(s) or np.ndim(s) == 0:
        return float(out)
    return out


def desired_velocity_slope(p: OvmParams, s):
    """dV/ds.  Zero on both saturated branches and at the branch points
    themselves (V has a kink there; simulations stay interior)."""
    s_arr = np.asarray(s, dtype=float)
    width = p.s_go - p.s_st
    slope = (p.v_max * np.pi / (2.0 * width)) * np.sin(np.pi * (s_arr - p.s_st) / width)
    out = np.where((s_arr <= p.s_st) | (s_arr >= p.s_go), 0.0, slope)
    if np.isscalar(s) or np.ndim(s) == 0:
        return float(out)
    return out


def forcing(p: OvmParams, s, s_dot, v):
    """Driver acceleration: alpha*(V(s) - v) + beta*s_dot."""
    return p.alpha * (desired_velocity(p, s) - v) + p.beta * s_dot


def equilibrium_from_spacing(p: OvmParams, s_star: float) -> Equilibrium:
    """Equilibrium at a prescribed spacing; the velocity follows in
    closed form as V(s_star)."""
    return Equilibrium(s_star=float(s_star), v_star=desired_velocity(p, s_star))


def equilibrium_from_velocity(p: OvmParams, v_star: float) -> Equilibrium:
    """Invert V on the ramp by bisection (V is strictly increasing on
    (s_st, s_go)); resolved to 1e-10 in spacing."""
    if not 0.0 < v_star < p.v_max:
        raise ConfigurationError(
            f"v_star must lie strictly inside (0, v_max); got {v_star}"
        )
    s_star = bisect(
        lambda s: desired_velocity(p, s) - v_star,
        p.s_st,
        p.s_go,
        xtol=1e-10,
    )
    return Equilibrium(s_star=float(s_star), v_star=float(v_star))


def linear_coeffs(alpha: float, beta: float, slope: float) -> LinearCoeffs:
    """Coefficient triple from the raw ingredients (no degeneracy check):
    alpha1 = alpha*slope, alpha2 = alpha+beta, alpha3 = beta."""
    return LinearCoeffs(alpha1=alpha * slope, alpha2=alpha + beta, alpha3=beta)


def linearize(p: OvmParams, eq: Equilibrium) -> LinearCoeffs:
    """Linearize the driver model about an equilibrium.

    Rejects degenerate coefficient triples (see LinearCoeffs.degeneracy)
    and inconsistent equilibria.
    """
    residual = forcing(p, eq.s_star, 0.0, eq.v_star)
    if abs(residual) > 1e-12:
        raise ConfigurationError(
            f"not an equilibrium: forcing residual {residual:.3e} at "
            f"s*={eq.s_star}, v*={eq.v_star}"
        )
    coeffs = linear_coeffs(p.alpha, p.beta, desired_velocity_slope(p, eq.s_star))
    if coeffs.is_degenerate:
        raise AnalysisError(
            "degenerate linearization: alpha1 - alpha2*alpha3 + alpha3 = "
            f"{coeffs.degeneracy:.3e}"
        )
    return coeffs


def nonlinear_rhs(p: OvmParams, states: np.ndarray, controlled_accel: float = 0.0,
                  controlled_index: int = 1) -> np.ndarray:
    """Time derivative of the full nonlinear ring.

    ``states`` is the interleaved absolute vector (s_1, v_1, ..., s_n, v_n)
    on a ring where car i follows car i-1 (car 1 follows car n), so
    ds_i/dt = v_{i-1} - v_i.  Human cars accelerate per `forcing`; the
    controlled car's acceleration is supplied externally
    (``controlled_accel`` at 1-based position ``controlled_index``).
    """
    states = np.asarray(states, dtype=float)
    n = states.size // 2
    if n < 2 or states.size != 2 * n:
        raise ConfigurationError(f"need an interleaved state of >= 2 cars, got size {states.size}")
    s = states[0::2]
    v = states[1::2]
    s_dot = np.roll(v, 1) - v
    v_dot = forcing(p, s, s_dot, v)
    v_dot[controlled_index - 1] = controlled_accel
    out = np.empty_like(states)
    out[0::2] = s_dot
    out[1::2] = v_dot
    return out
