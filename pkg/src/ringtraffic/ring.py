"""State-space assembly of the mixed-traffic ring.

The linearized ring of n cars (one of them externally controlled)
lives on the interleaved deviation state

    x = (s~_1, v~_1, s~_2, v~_2, ..., s~_n, v~_n)

with 2x2 block structure.  Two matrices are produced:

* ``a_open``  — the controlled car contributes no driver feedback; its
  acceleration row is zero and comes entirely from the input ``b``.
* ``a_circ``  — the same ring after substituting the virtual input
  (control minus the driver feedback the controlled car *would* apply),
  which makes the matrix block circulant and hence DFT-diagonalizable.

Both matrices share every row except the controlled car's block row,
and feeding ``virtual_input`` through ``b`` makes their dynamics agree
identically.
"""

from __future__ import annotations

import os
from dataclasses import dataclass

import numpy as np

from .errors import AnalysisError, ConfigurationError
from .ovm import LinearCoeffs


@dataclass(frozen=True)
class RingSpec:
    """Ring description: size, equilibrium spacing, linear coefficients.

    The controlled car sits at position 1; the circulant symmetry of the
    ring makes that choice immaterial, and fixing it keeps the control
    indexing simple.
    """

    n: int
    s_star: float
    coeffs: LinearCoeffs
    av_index: int = 1

    def __post_init__(self):
        if self.n < 2:
            raise ConfigurationError(f"ring needs at least 2 cars, got n={self.n}")
        if self.av_index != 1:
            raise ConfigurationError("the controlled car is fixed at position 1")
        if self.coeffs.is_degenerate:
            raise AnalysisError(
                "degenerate coefficients: alpha1 - alpha2*alpha3 + alpha3 = "
                f"{self.coeffs.degeneracy:.3e}"
            )


@dataclass(frozen=True, eq=False)
class LinearRingModel:
    """Assembled matrices: a_open/a_circ are 2n x 2n, b is 2n x 1."""

    n: int
    coeffs: LinearCoeffs
    a_open: np.ndarray
    a_circ: np.ndarray
    b: np.ndarray

    @property
    def state_dim(self) -> int:
        return 2 * self.n


def build_blocks(c: LinearCoeffs):
    """The 2x2 building blocks and the 2x1 input block.

    A1 acts on a human car's own state, A2 couples it to the car ahead.
    C1/C2 are the controlled car's versions: same spacing-rate row, but a
    zero acceleration row (the input supplies the acceleration instead).
    """
    a1 = np.array([[0.0, -1.0], [c.alpha1, -c.alpha2]])
    a2 = np.array([[0.0, 1.0], [0.0, c.alpha3]])
    c1 = np.array([[0.0, -1.0], [0.0, 0.0]])
    c2 = np.array([[0.0, 1.0], [0.0, 0.0]])
    b1 = np.array([[0.0], [1.0]])
    return a1, a2, c1, c2, b1


def assemble(spec: RingSpec) -> LinearRingModel:
    """Place the blocks: diagonal A1, subdiagonal A2 (wrapping around),
    with the controlled car's block row using C1/C2 in ``a_open`` and
    A1/A2 in ``a_circ``."""
    n = spec.n
    a1, a2, c1, c2, b1 = build_blocks(spec.coeffs)

    a_circ = np.zeros((2 * n, 2 * n))
    for i in range(n):
        a_circ[2 * i:2 * i + 2, 2 * i:2 * i + 2] = a1
        j = (i - 1) % n
        a_circ[2 * i:2 * i + 2, 2 * j:2 * j + 2] = a2

    a_open = a_circ.copy()
    a_open[0:2, 0:2] = c1
    a_open[0:2, 2 * (n - 1):2 * n] = c2

    b = np.zeros((2 * n, 1))
    b[0:2, :] = b1

    return LinearRingModel(n=n, coeffs=spec.coeffs, a_open=a_open, a_circ=a_circ, b=b)


def virtual_input(model: LinearRingModel, x: np.ndarray, u: float) -> float:
    """Input substitution that closes the circulant form:

        u_hat = u - (alpha1*s~_1 - alpha2*v~_1 + alpha3*v~_n)

    so that a_open x + b u equals a_circ x + b u_hat for every state.
    """
    x = np.asarray(x, dtype=float)
    if x.size != model.state_dim:
        raise ConfigurationError(
            f"state has size {x.size}, expected {model.state_dim}"
        )
    c = model.coeffs
    fb = c.alpha1 * x[0] - c.alpha2 * x[1] + c.alpha3 * x[2 * model.n - 1]
    return u - fb


def actual_input(model: LinearRingModel, x: np.ndarray, u_hat: float) -> float:
    """Inverse of `virtual_input`: recover the physical control."""
    x = np.asarray(x, dtype=float)
    c = model.coeffs
    fb = c.alpha1 * x[0] - c.alpha2 * x[1] + c.alpha3 * x[2 * model.n - 1]
    return u_hat + fb


def spacing_sum_vector(n: int) -> np.ndarray:
    """The left functional e = (1, 0, 1, 0, ..., 1, 0) that picks out the
    total spacing deviation.  e @ a_circ annihilates the dynamics and
    e @ b = 0: the total spacing is beyond the reach of the control."""
    e = np.zeros(2 * n)
    e[0::2] = 1.0
    return e


def write_matrix_csv(path: str, m: np.ndarray) -> None:
    """Row-major CSV at full double precision (17 significant digits)."""
    m = np.atleast_2d(np.asarray(m, dtype=float))
    with open(path, "w") as fh:
        for row in m:
            fh.write(",".join(f"{v:.16e}" for v in row) + "\n")


def export_model(model: LinearRingModel, out_dir: str) -> list[str]:
    """Dump a_open, a_circ and b as CSV files for external inspection."""
    written = []
    for name, mat in (("a_open", model.a_open),
                      ("a_circ", model.a_circ),
                      ("b", model.b)):
        path = os.path.join(out_dir, f"{name}.csv")
        write_matrix_csv(path, mat)
        written.append(path)
    return written
