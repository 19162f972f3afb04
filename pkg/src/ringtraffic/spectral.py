"""DFT block-diagonalization of the circulant ring matrix.

``a_circ`` is block circulant with 2x2 blocks, so conjugating by the
block DFT (F (x) I_2) turns it into n independent 2x2 modal blocks

    D_i = A1 + A2 * w^((n-1)(i-1)),   w = exp(2 pi j / n).

The first block (i = 1, w^0 = 1) is special: its spacing row is zero,
its eigenvalues are {0, alpha3 - alpha2}, and the input reaches only its
velocity coordinate.  The zero eigenvalue is the integrator that
accumulates the summed velocity disturbances of all cars.
"""

from __future__ import annotations

from dataclasses import dataclass

import cmath

import numpy as np

from .errors import AnalysisError, ConfigurationError
from .ring import LinearRingModel, build_blocks

_IMAG_TOL = 1e-12


@dataclass(frozen=True, eq=False)
class FourierMatrix:
    """Symmetrically normalized DFT matrix pair.

    ``f_star`` has entries w^(j*k)/sqrt(n) (zero-based j, k) with
    w = exp(+2 pi j / n); ``f`` is its conjugate, and f @ f_star = I.
    """

    n: int
    f_star: np.ndarray

    @property
    def f(self) -> np.ndarray:
        return np.conj(self.f_star)


@dataclass(frozen=True, eq=False)
class ModalDecomposition:
    """Modal blocks plus the transformed input/disturbance maps.

    blocks       list of n complex 2x2 matrices D_1 ... D_n
    modal_b      transformed input (real): [0, 1/sqrt(n)] in every block
    modal_d_map  the block DFT (F (x) I_2) to apply to disturbance vectors
    fourier      the FourierMatrix used
    """

    blocks: tuple
    modal_b: np.ndarray
    modal_d_map: np.ndarray
    fourier: FourierMatrix

    @property
    def n(self) -> int:
        return len(self.blocks)

    def block_diagonal(self) -> np.ndarray:
        """The 2n x 2n block-diagonal matrix blkdiag(D_1 ... D_n)."""
        n = self.n
        out = np.zeros((2 * n, 2 * n), dtype=complex)
        for i, d in enumerate(self.blocks):
            out[2 * i:2 * i + 2, 2 * i:2 * i + 2] = d
        return out

    def reconstruct(self) -> np.ndarray:
        """(F* (x) I_2) blkdiag (F (x) I_2); equals a_circ up to roundoff."""
        two = np.eye(2)
        f_star_kron = np.kron(self.fourier.f_star, two)
        f_kron = np.kron(self.fourier.f, two)
        return f_star_kron @ self.block_diagonal() @ f_kron


@dataclass(frozen=True, eq=False)
class FirstModeSystem:
    """The i = 1 modal block: a marginally stable 2-state system.

    a_mode       [[0, 0], [alpha1, alpha3 - alpha2]] (real, exact)
    b_mode       [0, 1/sqrt(n)]
    dist_gain    1/sqrt(n), multiplying the summed velocity disturbances,
                 which drive *both* rows of the mode
    eigenvalues  (0, alpha3 - alpha2), closed form
    """

    a_mode: np.ndarray
    b_mode: np.ndarray
    dist_gain: float
    eigenvalues: tuple


def fourier_matrix(n: int) -> FourierMatrix:
    """Build the n x n DFT matrix F* with entries w^(jk)/sqrt(n)."""
    if n < 1:
        raise ConfigurationError(f"need n >= 1, got {n}")
    j = np.arange(n)
    omega = np.exp(2j * np.pi / n)
    f_star = omega ** np.outer(j, j) / np.sqrt(n)
    return FourierMatrix(n=n, f_star=f_star)


def _check_block_circulant(a: np.ndarray, n: int) -> None:
    """Every block must equal its diagonal successor (wrapping)."""
    blocks = a.reshape(n, 2, n, 2).transpose(0, 2, 1, 3)
    shifted = np.roll(np.roll(blocks, -1, axis=0), -1, axis=1)
    deviation = float(np.max(np.abs(blocks - shifted)))
    tol = 1e-12 * max(1.0, float(np.max(np.abs(a))))
    if deviation > tol:
        raise AnalysisError(
            f"matrix is not block circulant: max block deviation {deviation:.3e}"
        )


def block_diagonalize(model: LinearRingModel) -> ModalDecomposition:
    """Split a_circ into its n modal 2x2 blocks.

    Verifies the circulant structure first, computes the blocks from the
    closed form D_i = A1 + A2 w^((n-1)(i-1)), and cross-checks that the
    transformed input really is [0, 1/sqrt(n)] replicated.
    """
    n = model.n
    _check_block_circulant(model.a_circ, n)

    a1, a2, _, _, _ = build_blocks(model.coeffs)
    omega = np.exp(2j * np.pi / n)
    blocks = tuple(a1 + a2 * omega ** ((n - 1) * i) for i in range(n))

    four = fourier_matrix(n)
    f_kron = np.kron(four.f, np.eye(2))
    mb_complex = f_kron @ model.b[:, 0].astype(complex)
    expected = np.tile([0.0, 1.0], n) / np.sqrt(n)
    if np.max(np.abs(mb_complex - expected)) > _IMAG_TOL:
        raise AnalysisError("transformed input deviates from its closed form")

    return ModalDecomposition(
        blocks=blocks, modal_b=expected, modal_d_map=f_kron, fourier=four
    )


def first_mode(model: LinearRingModel) -> FirstModeSystem:
    """Extract the i = 1 block in exact real arithmetic (w^0 = 1)."""
    c = model.coeffs
    a_mode = np.array([[0.0, 0.0], [c.alpha1, c.alpha3 - c.alpha2]])
    root_n = np.sqrt(model.n)
    return FirstModeSystem(
        a_mode=a_mode,
        b_mode=np.array([0.0, 1.0 / root_n]),
        dist_gain=1.0 / root_n,
        eigenvalues=(0.0, c.alpha3 - c.alpha2),
    )


def block_eigenvalues(block: np.ndarray) -> tuple:
    """Closed-form eigenvalues of a 2x2 (possibly complex) matrix."""
    tr = block[0, 0] + block[1, 1]
    det = block[0, 0] * block[1, 1] - block[0, 1] * block[1, 0]
    disc = cmath.sqrt(tr * tr - 4.0 * det)
    return ((tr + disc) / 2.0, (tr - disc) / 2.0)


def modal_eigenvalues(decomp: ModalDecomposition) -> np.ndarray:
    """(n, 2) complex array of per-block eigenvalues, block order."""
    return np.array([block_eigenvalues(d) for d in decomp.blocks])


def write_modal_eigenvalues_csv(path: str, decomp: ModalDecomposition) -> None:
    """Columns: block index (1-based), Re/Im of both eigenvalues."""
    eigs = modal_eigenvalues(decomp)
    with open(path, "w") as fh:
        fh.write("block,re_lambda1,im_lambda1,re_lambda2,im_lambda2\n")
        for i, (l1, l2) in enumerate(eigs, start=1):
            fh.write(
                f"{i},{l1.real:.16e},{l1.imag:.16e},"
                f"{l2.real:.16e},{l2.imag:.16e}\n"
            )


def mode_signal(x) -> float:
    """First modal spacing coordinate of a state: (1/sqrt(n)) sum_i s~_i.

    This is the spacing component of the first block of (F (x) I_2) x;
    the first DFT row is constant, so the value reduces to the scaled
    spacing sum and any imaginary residue must vanish.
    """
    x = np.asarray(x)
    if x.size % 2:
        raise ConfigurationError(f"state length must be even, got {x.size}")
    n = x.size // 2
    val = complex(x[0::2].sum()) / np.sqrt(n)
    if abs(val.imag) > _IMAG_TOL:
        raise AnalysisError(f"mode signal has imaginary residue {val.imag:.3e}")
    return val.real


def modal_disturbance(d) -> float:
    """Drive of the first mode: (1/sqrt(n)) sum_i d^v_i.

    Only the velocity channels (even positions of the interleaved
    disturbance vector) enter; acceleration channels cancel out of the
    first mode entirely.
    """
    d = np.asarray(d)
    if d.size % 2:
        raise ConfigurationError(f"disturbance length must be even, got {d.size}")
    n = d.size // 2
    val = complex(d[0::2].sum()) / np.sqrt(n)
    if abs(val.imag) > _IMAG_TOL:
        raise AnalysisError(f"modal disturbance has imaginary residue {val.imag:.3e}")
    return val.real
