"""Schmidt decomposition, Schmidt-number witnesses and isotropic-family thresholds."""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .qlinalg import (
    DimensionError,
    InvalidOperatorError,
    check_density,
    check_hermitian,
    embed_ket,
    ket,
    max_entangled,
    max_entangled_projector,
    projector,
)

RANK_CUTOFF = 1e-10
IMAG_TOL = 1e-10

# Visibility of the d=8 isotropic component in the counterexample family.
COUNTEREXAMPLE_P = 0.24
COUNTEREXAMPLE_D = 8

# Two-qutrit isotropic states admit an LHV model (general POVMs) up to this
# visibility. Quoted from the literature; no closed formula is implemented.
QUTRIT_ISOTROPIC_POVM_LHV_BOUND = Fraction(8, 27)


@dataclass(frozen=True, eq=False)
class SchmidtDecomposition:
    """``psi = sum_i coefficients[i] * left[:, i] (x) right[:, i]``."""

    coefficients: np.ndarray
    left: np.ndarray
    right: np.ndarray

    @property
    def rank(self) -> int:
        return len(self.coefficients)

    def reconstruct(self) -> np.ndarray:
        out = np.zeros(self.left.shape[0] * self.right.shape[0], dtype=complex)
        for c, u, v in zip(self.coefficients, self.left.T, self.right.T):
            out += c * np.kron(u, v)
        return out


@dataclass(frozen=True, eq=False)
class WitnessOperator:
    op: np.ndarray
    r: int
    dims: tuple[int, int]

    def __post_init__(self):
        check_hermitian(self.op)
        if self.op.shape[0] != self.dims[0] * self.dims[1]:
            raise DimensionError(f"witness shape {self.op.shape} does not match dims {self.dims}")
        if not 1 <= self.r <= min(self.dims):
            raise ValueError(f"Schmidt-rank parameter {self.r} out of range for dims {self.dims}")


def _amplitude_matrix(psi, dims) -> np.ndarray:
    dA, dB = (int(d) for d in dims)
    v = ket(psi)
    if v.size != dA * dB:
        raise DimensionError(f"state has {v.size} amplitudes, expected {dA}*{dB}")
    return v.reshape(dA, dB)


def schmidt_decompose(psi, dims: tuple[int, int]) -> SchmidtDecomposition:
    """Schmidt decomposition of a normalized bipartite pure state.

    Singular values at or below ``RANK_CUTOFF * max`` are dropped, so the
    number of retained coefficients is the Schmidt rank.
    """
    u, s, vh = np.linalg.svd(_amplitude_matrix(psi, dims))
    k = int(np.count_nonzero(s > RANK_CUTOFF * s[0]))
    return SchmidtDecomposition(coefficients=s[:k], left=u[:, :k], right=vh[:k, :].T)


def schmidt_rank(psi, dims: tuple[int, int]) -> int:
    s = np.linalg.svd(_amplitude_matrix(psi, dims), compute_uv=False)
    return int(np.count_nonzero(s > RANK_CUTOFF * s[0]))


def optimal_witness(d: int, r: int) -> WitnessOperator:
    """``I (x) I - (d/r) P_d``, which detects Schmidt number above ``r`` on ``C^d (x) C^d``."""
    if d < 1 or not 1 <= r <= d:
        raise ValueError(f"need 1 <= r <= d, got d={d}, r={r}")
    op = np.eye(d * d, dtype=complex) - (d / r) * max_entangled_projector(d)
    return WitnessOperator(op=op, r=r, dims=(d, d))


def witness_expectation(w: WitnessOperator, rho) -> float:
    rho = np.asarray(rho, dtype=complex)
    if rho.shape != w.op.shape:
        raise DimensionError(f"state shape {rho.shape} does not match witness {w.op.shape}")
    val = np.trace(w.op @ rho)
    if abs(val.imag) > IMAG_TOL:
        raise InvalidOperatorError(f"expectation has imaginary part {val.imag:.3e}")
    return float(val.real)


def isotropic_state(d: int, p: float) -> np.ndarray:
    """``p |Phi_d+><Phi_d+| + (1 - p) I/d^2``."""
    if d < 1:
        raise ValueError(f"dimension must be positive, got {d}")
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"mixing parameter must lie in [0, 1], got {p}")
    return p * max_entangled_projector(d) + (1 - p) * np.eye(d * d) / (d * d)


def isotropic_sn_threshold(d: int, r: int) -> Fraction:
    """Largest visibility for which the isotropic state has Schmidt number at most ``r``."""
    if d < 1 or not 1 <= r <= d:
        raise ValueError(f"need 1 <= r <= d, got d={d}, r={r}")
    if d == 1:
        return Fraction(1)
    return Fraction(r * d - 1, d * d - 1)


def isotropic_lhv_threshold_projective(d: int) -> Fraction:
    """Visibility below which the isotropic state has a projective-measurement LHV model.

    Equals ``(H_d - 1) / (d - 1)`` with ``H_d`` the ``d``-th harmonic number.
    """
    if d < 2:
        raise ValueError(f"need d >= 2, got {d}")
    return sum((Fraction(1, k) for k in range(2, d + 1)), Fraction(0)) / (d - 1)


def phi2_plus(d: int = COUNTEREXAMPLE_D) -> np.ndarray:
    """Two-qubit maximally entangled state on levels {0, 1} of ``C^d (x) C^d``."""
    return embed_ket(max_entangled(2), 2, d)


def counterexample_state(lam: float) -> np.ndarray:
    """``lam * iso_8(0.24) + (1 - lam) |phi2+><phi2+|`` on ``C^8 (x) C^8``."""
    if not 0.0 <= lam <= 1.0:
        raise ValueError(f"lambda must lie in [0, 1], got {lam}")
    rho = lam * isotropic_state(COUNTEREXAMPLE_D, COUNTEREXAMPLE_P) + (1 - lam) * projector(phi2_plus())
    return check_density(rho)
