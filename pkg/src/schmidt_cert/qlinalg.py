"""Dense complex linear algebra for bipartite and multi-factor quantum systems.

Operators are plain ``numpy`` arrays of dtype ``complex128``. Multi-factor
spaces are described by an ordered list of factor dimensions, e.g.
``[dA0, dA, dB, dB0]``; selectors such as ``keep`` refer to positions in
that list.
"""

from __future__ import annotations

from functools import reduce
from typing import Iterable, Sequence

import numpy as np
from scipy.stats import unitary_group

HERMITIAN_TOL = 1e-12
PSD_TOL = 1e-10
TRACE_TOL = 1e-10
NORM_TOL = 1e-12


class DimensionError(ValueError):
    """Operator or state shape does not match the declared factor layout."""


class InvalidOperatorError(ValueError):
    """Operator violates a structural requirement (hermiticity, positivity, ...)."""


def as_operator(op) -> np.ndarray:
    m = np.asarray(op, dtype=complex)
    if m.ndim != 2:
        raise DimensionError(f"expected a matrix, got array of shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise InvalidOperatorError("operator has non-finite entries")
    return m


def dagger(op: np.ndarray) -> np.ndarray:
    return np.conj(np.transpose(op))


def kron(*ops) -> np.ndarray:
    """Kronecker product of one or more matrices (or vectors), left to right."""
    if not ops:
        raise ValueError("kron needs at least one argument")
    return reduce(np.kron, (np.asarray(o, dtype=complex) for o in ops))


def transpose_op(op) -> np.ndarray:
    """Entrywise transpose in the computational basis."""
    return np.transpose(as_operator(op)).copy()


def ket(amplitudes) -> np.ndarray:
    v = np.asarray(amplitudes, dtype=complex).reshape(-1)
    n = np.linalg.norm(v)
    if abs(n - 1.0) > NORM_TOL:
        raise InvalidOperatorError(f"state is not normalized (norm {n:.3e})")
    return v


def projector(v) -> np.ndarray:
    v = np.asarray(v, dtype=complex).reshape(-1)
    return np.outer(v, np.conj(v))


def basis(d: int, i: int) -> np.ndarray:
    v = np.zeros(d, dtype=complex)
    v[i] = 1.0
    return v


def max_entangled(d: int) -> np.ndarray:
    """Amplitudes of ``(1/sqrt(d)) sum_i |ii>`` on ``C^d (x) C^d``."""
    if d < 1:
        raise ValueError(f"dimension must be positive, got {d}")
    v = np.zeros(d * d, dtype=complex)
    v[np.arange(d) * (d + 1)] = 1.0 / np.sqrt(d)
    return v


def max_entangled_projector(d: int) -> np.ndarray:
    return projector(max_entangled(d))


def embed_ket(v, d_small: int, d_large: int) -> np.ndarray:
    """Embed a bipartite ket on ``C^s (x) C^s`` into ``C^D (x) C^D``.

    Level ``i`` of each local factor is mapped to level ``i`` of the larger
    space, i.e. the embedding uses the lowest ``s`` computational levels.
    """
    if d_small > d_large:
        raise DimensionError("cannot embed into a smaller space")
    t = np.asarray(v, dtype=complex).reshape(d_small, d_small)
    out = np.zeros((d_large, d_large), dtype=complex)
    out[:d_small, :d_small] = t
    return out.reshape(-1)


# --- checks -----------------------------------------------------------------


def is_hermitian(op, tol: float = HERMITIAN_TOL) -> bool:
    m = np.asarray(op)
    return m.shape[0] == m.shape[1] and float(np.max(np.abs(m - dagger(m)), initial=0.0)) <= tol


def is_psd(op, tol: float = PSD_TOL) -> bool:
    m = np.asarray(op)
    if not is_hermitian(m, max(tol, HERMITIAN_TOL)):
        return False
    return bool(np.linalg.eigvalsh((m + dagger(m)) / 2).min() >= -tol)


def is_density(op, tol: float = PSD_TOL) -> bool:
    m = np.asarray(op)
    return is_psd(m, tol) and abs(np.trace(m).real - 1.0) <= TRACE_TOL


def check_hermitian(op, tol: float = HERMITIAN_TOL) -> np.ndarray:
    m = as_operator(op)
    if m.shape[0] != m.shape[1]:
        raise DimensionError(f"operator is not square: {m.shape}")
    if not is_hermitian(m, tol):
        raise InvalidOperatorError("operator is not Hermitian")
    return m


def check_density(rho, dim: int | None = None) -> np.ndarray:
    """Validate ``rho`` as a density operator and return it as an array."""
    m = check_hermitian(rho, max(HERMITIAN_TOL, PSD_TOL))
    if dim is not None and m.shape[0] != dim:
        raise DimensionError(f"expected a {dim}-dimensional state, got {m.shape[0]}")
    if np.linalg.eigvalsh(m).min() < -PSD_TOL:
        raise InvalidOperatorError("density operator has a negative eigenvalue")
    if abs(np.trace(m).real - 1.0) > TRACE_TOL:
        raise InvalidOperatorError(f"density operator has trace {np.trace(m).real}")
    return m


def check_povm(elements: Sequence, dim: int | None = None) -> list[np.ndarray]:
    """Validate a POVM: each element PSD, elements summing to the identity."""
    els = [as_operator(e) for e in elements]
    if not els:
        raise InvalidOperatorError("POVM has no elements")
    n = els[0].shape[0]
    if dim is not None and n != dim:
        raise DimensionError(f"POVM acts on dimension {n}, expected {dim}")
    for k, e in enumerate(els):
        if e.shape != (n, n):
            raise DimensionError("POVM elements have inconsistent shapes")
        if not is_psd(e):
            raise InvalidOperatorError(f"POVM element {k} is not positive semidefinite")
    if np.max(np.abs(sum(els) - np.eye(n))) > PSD_TOL:
        raise InvalidOperatorError("POVM elements do not sum to the identity")
    return els


# --- multi-factor manipulation ----------------------------------------------


def _check_layout(op: np.ndarray, dims: Sequence[int]) -> None:
    total = int(np.prod(dims))
    if op.shape != (total, total):
        raise DimensionError(f"operator shape {op.shape} does not match factor dims {list(dims)}")


def partial_trace(op, dims: Sequence[int], keep: Iterable[int]) -> np.ndarray:
    """Trace out every factor not listed in ``keep``.

    Parameters
    ----------
    op : array_like
        Square operator on ``dims[0] (x) dims[1] (x) ...``.
    dims : sequence of int
        Factor dimensions in tensor order.
    keep : iterable of int
        Positions of the surviving factors. They stay in their original order.

    Returns
    -------
    numpy.ndarray
        Reduced operator on the kept factors.
    """
    m = as_operator(op)
    dims = [int(d) for d in dims]
    _check_layout(m, dims)
    keep = sorted(set(keep))
    if any(k < 0 or k >= len(dims) for k in keep):
        raise DimensionError(f"keep selector {keep} out of range for {len(dims)} factors")
    t = m.reshape(dims + dims)
    n = len(dims)
    for i in reversed(range(len(dims))):
        if i in keep:
            continue
        t = np.trace(t, axis1=i, axis2=i + n)
        n -= 1
    d_out = int(np.prod([dims[k] for k in keep])) if keep else 1
    return t.reshape(d_out, d_out)


def permute_factors(op, dims: Sequence[int], order: Sequence[int]) -> np.ndarray:
    """Reorder tensor factors so that new factor ``j`` is old factor ``order[j]``."""
    m = as_operator(op)
    dims = [int(d) for d in dims]
    _check_layout(m, dims)
    n = len(dims)
    if sorted(order) != list(range(n)):
        raise ValueError(f"{order} is not a permutation of {n} factors")
    t = m.reshape(dims + dims)
    t = np.transpose(t, list(order) + [n + k for k in order])
    total = int(np.prod(dims))
    return t.reshape(total, total)


def embed_operator(op, dims: Sequence[int], targets: Sequence[int]) -> np.ndarray:
    """Lift ``op`` acting on factors ``targets`` (in that order) to the full space.

    The remaining factors receive the identity.
    """
    dims = [int(d) for d in dims]
    targets = list(targets)
    rest = [k for k in range(len(dims)) if k not in targets]
    m = as_operator(op)
    d_t = int(np.prod([dims[k] for k in targets]))
    if m.shape != (d_t, d_t):
        raise DimensionError(f"operator shape {m.shape} does not match target factors {targets}")
    d_r = int(np.prod([dims[k] for k in rest])) if rest else 1
    full = np.kron(m, np.eye(d_r))
    # ``full`` lives on (targets..., rest...); send each factor back home.
    current = targets + rest
    inverse = [current.index(k) for k in range(len(dims))]
    return permute_factors(full, [dims[k] for k in current], inverse)


# --- random objects -----------------------------------------------------------


def haar_unitary(d: int, rng: np.random.Generator) -> np.ndarray:
    return np.asarray(unitary_group.rvs(d, random_state=rng), dtype=complex).reshape(d, d)


def haar_ket(d: int, rng: np.random.Generator) -> np.ndarray:
    v = rng.normal(size=d) + 1j * rng.normal(size=d)
    return v / np.linalg.norm(v)


def random_density(d: int, rng: np.random.Generator, rank: int | None = None) -> np.ndarray:
    """Random density operator from the induced (Ginibre) measure."""
    k = d if rank is None else rank
    g = rng.normal(size=(d, k)) + 1j * rng.normal(size=(d, k))
    rho = g @ dagger(g)
    return rho / np.trace(rho).real


def random_hermitian(d: int, rng: np.random.Generator) -> np.ndarray:
    g = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
    return (g + dagger(g)) / 2
