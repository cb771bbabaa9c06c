"""Expansion of a bipartite Hermitian operator over product ensembles of local states.

Given local ensembles ``{xi^x}`` and ``{zeta^y}`` of density operators, find
real coefficients with ``W = sum_{x,y} gamma[x, y] xi^x (x) zeta^y``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .qlinalg import DimensionError, check_density, check_hermitian, projector
from .schmidt import WitnessOperator

RESIDUAL_TOL = 1e-9
MAX_CONDITION = 1e12


class SpanError(ValueError):
    """The product ensemble does not span the requested operator."""


class ConditioningError(ValueError):
    """The linear system for the coefficients is numerically ill-conditioned."""


def _hermitian_vectors(ops) -> np.ndarray:
    # column-stacking vectorization; real and imaginary parts stacked row-wise
    cols = np.stack([np.asarray(o, dtype=complex).ravel(order="F") for o in ops], axis=1)
    return np.vstack([cols.real, cols.imag])


@dataclass(frozen=True, eq=False)
class ProductEnsemble:
    """Ordered list of density operators on one local system."""

    states: tuple
    d: int = field(init=False)

    def __post_init__(self):
        states = tuple(check_density(s) for s in self.states)
        if not states:
            raise ValueError("ensemble is empty")
        d = states[0].shape[0]
        if any(s.shape != (d, d) for s in states):
            raise DimensionError("ensemble members have different dimensions")
        object.__setattr__(self, "states", states)
        object.__setattr__(self, "d", d)

    def __len__(self) -> int:
        return len(self.states)

    @property
    def spanning(self) -> bool:
        """True when the members span all Hermitian operators on ``C^d``."""
        return int(np.linalg.matrix_rank(_hermitian_vectors(self.states))) == self.d**2


def standard_ensemble(d: int) -> ProductEnsemble:
    """Informationally complete ensemble of ``d**2`` pure states.

    Order: ``|i>`` for each level, then ``(|i> + |j>)/sqrt2`` for ``i < j``,
    then ``(|i> + i|j>)/sqrt2`` for ``i < j`` (pairs in lexicographic order).
    """
    if d < 1:
        raise ValueError(f"dimension must be positive, got {d}")
    eye = np.eye(d, dtype=complex)
    pairs = [(i, j) for i in range(d) for j in range(i + 1, d)]
    kets = [eye[i] for i in range(d)]
    kets += [(eye[i] + eye[j]) / np.sqrt(2) for i, j in pairs]
    kets += [(eye[i] + 1j * eye[j]) / np.sqrt(2) for i, j in pairs]
    return ProductEnsemble(tuple(projector(k) for k in kets))


def canonical_qutrit_ensemble() -> ProductEnsemble:
    """The nine qutrit projectors onto |0>, |1>, |2>, (|0>+|1>)/sqrt2, ..., (|1>+i|2>)/sqrt2."""
    return standard_ensemble(3)


@dataclass(frozen=True, eq=False)
class GammaDecomposition:
    gamma: np.ndarray
    left: ProductEnsemble
    right: ProductEnsemble
    target: WitnessOperator | None = None
    residual: float = 0.0

    def __post_init__(self):
        g = np.asarray(self.gamma, dtype=float)
        if g.shape != (len(self.left), len(self.right)):
            raise DimensionError(f"gamma shape {g.shape} does not match ensembles "
                                 f"({len(self.left)}, {len(self.right)})")
        object.__setattr__(self, "gamma", g)

    @property
    def dims(self) -> tuple[int, int]:
        return (self.left.d, self.right.d)


def product_design_matrix(left: ProductEnsemble, right: ProductEnsemble) -> np.ndarray:
    """Real design matrix whose column ``x * |Y| + y`` is ``vec(xi^x (x) zeta^y)``."""
    return _hermitian_vectors([np.kron(a, b) for a in left.states for b in right.states])


def solve_gamma(w: WitnessOperator | np.ndarray, left: ProductEnsemble, right: ProductEnsemble,
                tol: float = RESIDUAL_TOL) -> GammaDecomposition:
    """Least-squares coefficients of ``w`` over the product family ``left x right``.

    The minimum-norm solution is returned when the family is overcomplete.

    Raises
    ------
    SpanError
        If the Frobenius residual exceeds ``tol``.
    ConditioningError
        If the nonsingular part of the design matrix has condition number above 1e12.
    """
    if isinstance(w, WitnessOperator):
        op, target = w.op, w
    else:
        op, target = check_hermitian(w), None
    if op.shape[0] != left.d * right.d:
        raise DimensionError(f"operator on dimension {op.shape[0]} but ensembles give "
                             f"{left.d}*{right.d}")
    A = product_design_matrix(left, right)
    b = _hermitian_vectors([op])[:, 0]
    u, s, vh = np.linalg.svd(A, full_matrices=False)
    keep = s > s[0] * max(A.shape) * np.finfo(float).eps
    cond = s[0] / s[keep][-1]
    if cond > MAX_CONDITION:
        raise ConditioningError(f"design matrix condition number {cond:.3e} exceeds {MAX_CONDITION:.0e}")
    coef = vh[keep].T @ ((u[:, keep].T @ b) / s[keep])
    gamma = coef.reshape(len(left), len(right))
    dec = GammaDecomposition(gamma=gamma, left=left, right=right, target=target)
    residual = float(np.linalg.norm(reconstruct(dec) - op))
    if residual > tol:
        raise SpanError(f"ensemble does not span the witness (residual {residual:.3e})")
    return GammaDecomposition(gamma=gamma, left=left, right=right, target=target, residual=residual)


def reconstruct(dec: GammaDecomposition) -> np.ndarray:
    """Dense operator ``sum_{x,y} gamma[x, y] xi^x (x) zeta^y``."""
    L = np.stack(dec.left.states)
    R = np.stack(dec.right.states)
    dA, dB = dec.dims
    t = np.einsum("xy,xij,ykl->ikjl", dec.gamma, L, R)
    return t.reshape(dA * dB, dA * dB)
