"""Bell-nonlocal and semiquantum nonlocal games: correlations, payoffs, compilation.

Outcome labels are zero-based array indices. For games compiled from a
witness, outcome index 0 is the rewarded outcome (the "first" outcome of
each side) and index 1 is its complement.

Semiquantum simulations use the factor order ``A0 (x) A (x) B (x) B0``:
Alice's measurement acts on ``(A0, A)`` and Bob's on ``(B, B0)``, each in
that order.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .decompose import GammaDecomposition
from .qlinalg import (
    DimensionError,
    InvalidOperatorError,
    basis,
    check_density,
    check_povm,
    kron,
    max_entangled_projector,
    projector,
    transpose_op,
)
from .schmidt import COUNTEREXAMPLE_D

DIST_TOL = 1e-12
NORMALIZATION_TOL = 1e-9
IMAG_TOL = 1e-10
DENSE_LIMIT = 10_000


class ShapeError(ValueError):
    """Game, table or measurement shapes are inconsistent."""


def _distribution(p, name: str) -> np.ndarray:
    p = np.asarray(p, dtype=float).reshape(-1)
    if p.size == 0 or np.any(p < 0) or abs(p.sum() - 1.0) > DIST_TOL:
        raise ValueError(f"{name} is not a probability distribution: {p}")
    return p


def uniform(n: int) -> np.ndarray:
    return np.full(n, 1.0 / n)


@dataclass(frozen=True, eq=False)
class CorrelationTable:
    """Probabilities ``p(a, b | x, y)`` stored as ``probs[a, b, x, y]``."""

    probs: np.ndarray

    def __post_init__(self):
        p = np.asarray(self.probs, dtype=float)
        if p.ndim != 4:
            raise ShapeError(f"correlation table must be 4-dimensional, got {p.shape}")
        if p.min() < -1e-10 or p.max() > 1 + 1e-10:
            raise InvalidOperatorError("probabilities outside [0, 1]")
        if np.max(np.abs(p.sum(axis=(0, 1)) - 1.0)) > NORMALIZATION_TOL:
            raise InvalidOperatorError("correlation table is not normalized for every (x, y)")
        object.__setattr__(self, "probs", p)

    @property
    def shape(self) -> tuple[int, int, int, int]:
        return self.probs.shape

    def marginal_a(self) -> np.ndarray:
        """``p(a | x, y)`` as ``[a, x, y]``."""
        return self.probs.sum(axis=1)

    def marginal_b(self) -> np.ndarray:
        return self.probs.sum(axis=0)

    def no_signaling_residual(self) -> float:
        """Largest dependence of one party's marginal on the other party's input."""
        pa = self.marginal_a()
        pb = self.marginal_b()
        ra = np.max(np.abs(pa - pa[:, :, :1]))
        rb = np.max(np.abs(pb - pb[:, :1, :]))
        return float(max(ra, rb))

    def rows(self):
        """Yield ``(x, y, a, b, p)`` in lexicographic input-then-outcome order."""
        nA, nB, nX, nY = self.shape
        for x in range(nX):
            for y in range(nY):
                for a in range(nA):
                    for b in range(nB):
                        yield x, y, a, b, float(self.probs[a, b, x, y])


@dataclass(frozen=True, eq=False)
class BellGame:
    """Classical-input game with fixed local measurements.

    ``measurements_a[x][a]`` is Alice's POVM element for outcome ``a`` on
    input ``x``; likewise for Bob. ``payoff[a, b, x, y]`` scores each event.
    """

    p_x: np.ndarray
    q_y: np.ndarray
    measurements_a: tuple
    measurements_b: tuple
    payoff: np.ndarray

    def __post_init__(self):
        p_x = _distribution(self.p_x, "p_x")
        q_y = _distribution(self.q_y, "q_y")
        ma = tuple(tuple(check_povm(m)) for m in self.measurements_a)
        mb = tuple(tuple(check_povm(m)) for m in self.measurements_b)
        if len(ma) != p_x.size or len(mb) != q_y.size:
            raise ShapeError("one POVM per input is required")
        if len({len(m) for m in ma}) != 1 or len({len(m) for m in mb}) != 1:
            raise ShapeError("all inputs of a party must have the same number of outcomes")
        if len({m[0].shape for m in ma}) != 1 or len({m[0].shape for m in mb}) != 1:
            raise ShapeError("all POVMs of a party must act on the same space")
        payoff = np.asarray(self.payoff, dtype=float)
        if payoff.shape != (len(ma[0]), len(mb[0]), p_x.size, q_y.size):
            raise ShapeError(f"payoff shape {payoff.shape} does not match the game")
        for name, val in (("p_x", p_x), ("q_y", q_y), ("measurements_a", ma),
                          ("measurements_b", mb), ("payoff", payoff)):
            object.__setattr__(self, name, val)

    @property
    def dims(self) -> tuple[int, int]:
        return (self.measurements_a[0][0].shape[0], self.measurements_b[0][0].shape[0])


@dataclass(frozen=True, eq=False)
class SemiquantumGame:
    """Game whose inputs are trusted quantum states instead of classical indices."""

    input_states_a: tuple
    input_states_b: tuple
    p_x: np.ndarray
    q_y: np.ndarray
    payoff: np.ndarray

    def __post_init__(self):
        sa = tuple(check_density(s) for s in self.input_states_a)
        sb = tuple(check_density(s) for s in self.input_states_b)
        if not sa or not sb:
            raise ShapeError("input-state lists must be nonempty")
        if len({s.shape for s in sa}) != 1 or len({s.shape for s in sb}) != 1:
            raise ShapeError("input states of a party must share one dimension")
        p_x = _distribution(self.p_x, "p_x")
        q_y = _distribution(self.q_y, "q_y")
        if p_x.size != len(sa) or q_y.size != len(sb):
            raise ShapeError("input distributions do not match the number of input states")
        payoff = np.asarray(self.payoff, dtype=float)
        if payoff.ndim != 4 or payoff.shape[2:] != (len(sa), len(sb)):
            raise ShapeError(f"payoff shape {payoff.shape} does not match the game")
        for name, val in (("input_states_a", sa), ("input_states_b", sb), ("p_x", p_x),
                          ("q_y", q_y), ("payoff", payoff)):
            object.__setattr__(self, name, val)

    @property
    def outcomes(self) -> tuple[int, int]:
        return self.payoff.shape[:2]

    @property
    def input_dims(self) -> tuple[int, int]:
        return (self.input_states_a[0].shape[0], self.input_states_b[0].shape[0])


# --- correlations -------------------------------------------------------------


def _real_table(t: np.ndarray) -> np.ndarray:
    if np.max(np.abs(t.imag), initial=0.0) > IMAG_TOL:
        raise InvalidOperatorError("Born-rule probabilities have an imaginary part")
    return t.real


def bell_correlation(game: BellGame, rho) -> CorrelationTable:
    """Born-rule table ``Tr[(M^{a|x} (x) N^{b|y}) rho]``."""
    dA, dB = game.dims
    rho = check_density(rho, dA * dB)
    Ma = np.array([list(m) for m in game.measurements_a])  # [x, a, i, j]
    Nb = np.array([list(m) for m in game.measurements_b])
    R = rho.reshape(dA, dB, dA, dB)
    t = np.einsum("xaij,ybkl,jlik->abxy", Ma, Nb, R)
    return CorrelationTable(_real_table(t))


def _split_povm(elements, d_first: int, d_second: int, who: str) -> np.ndarray:
    els = check_povm(elements)
    n = els[0].shape[0]
    if n != d_first * d_second:
        raise DimensionError(f"{who} measurement acts on dimension {n}, expected "
                             f"{d_first}*{d_second}")
    return np.array(els).reshape(len(els), d_first, d_second, d_first, d_second)


def semiquantum_correlation(game: SemiquantumGame, rho, m_a, m_b,
                            method: str = "contract") -> CorrelationTable:
    """Born-rule table ``Tr[(M^a (x) N^b)(psi^x (x) rho (x) phi^y)]``.

    Parameters
    ----------
    game : SemiquantumGame
        Supplies the quantum inputs ``psi^x`` (on A0) and ``phi^y`` (on B0).
    rho : array_like
        Shared state on ``A (x) B``; ``dA`` and ``dB`` are inferred from the
        measurement dimensions.
    m_a, m_b : sequence of array_like
        POVM elements on ``A0 (x) A`` and ``B (x) B0`` respectively.
    method : {"contract", "dense"}
        ``"contract"`` folds each input state into the measurement first and
        never forms the four-factor operator. ``"dense"`` materializes it and
        is limited to total dimension 10**4.
    """
    dA0, dB0 = game.input_dims
    na = np.asarray(m_a[0]).shape[0]
    nb = np.asarray(m_b[0]).shape[0]
    if na % dA0 or nb % dB0:
        raise DimensionError("measurement dimensions are not multiples of the input dimensions")
    dA, dB = na // dA0, nb // dB0
    rho = check_density(rho, dA * dB)
    if len(m_a) != game.outcomes[0] or len(m_b) != game.outcomes[1]:
        raise ShapeError("number of measurement outcomes does not match the payoff table")
    Ma = _split_povm(m_a, dA0, dA, "Alice's")  # [a, p, i, q, j] on (A0, A)
    Nb = _split_povm(m_b, dB, dB0, "Bob's")  # [b, k, r, l, s] on (B, B0)
    psi = np.array(game.input_states_a)
    phi = np.array(game.input_states_b)

    if method == "contract":
        # Tr_A0[M^a (psi^x (x) I)] and Tr_B0[N^b (I (x) phi^y)]
        Mt = np.einsum("apiqj,xqp->axij", Ma, psi)
        Nt = np.einsum("bkrls,ysr->bykl", Nb, phi)
        R = rho.reshape(dA, dB, dA, dB)
        t = np.einsum("axij,bykl,jlik->abxy", Mt, Nt, R)
    elif method == "dense":
        total = dA0 * dA * dB * dB0
        if total > DENSE_LIMIT:
            raise ValueError(f"dense simulation limited to dimension {DENSE_LIMIT}, need {total}")
        Mf = [np.asarray(m, dtype=complex) for m in m_a]
        Nf = [np.asarray(m, dtype=complex) for m in m_b]
        t = np.empty((len(Mf), len(Nf), len(psi), len(phi)), dtype=complex)
        for x, ps in enumerate(psi):
            for y, ph in enumerate(phi):
                state = kron(ps, rho, ph)
                for a, M in enumerate(Mf):
                    for b, N in enumerate(Nf):
                        t[a, b, x, y] = np.trace(kron(M, N) @ state)
    else:
        raise ValueError(f"unknown method {method!r}")
    return CorrelationTable(_real_table(t))


def average_payoff(game: BellGame | SemiquantumGame, correlation: CorrelationTable) -> float:
    """``sum J(a,b,x,y) p(a,b|x,y) p(x) q(y)``."""
    if correlation.shape != game.payoff.shape:
        raise ShapeError(f"table shape {correlation.shape} does not match payoff {game.payoff.shape}")
    return float(np.einsum("abxy,abxy,x,y->", game.payoff, correlation.probs, game.p_x, game.q_y))


def bell_functional(game: BellGame, correlation: CorrelationTable) -> float:
    """Input-unweighted score ``sum J(a,b,x,y) p(a,b|x,y)``.

    For the CHSH game this is the familiar CHSH value with local bound 2.
    """
    if correlation.shape != game.payoff.shape:
        raise ShapeError(f"table shape {correlation.shape} does not match payoff {game.payoff.shape}")
    return float(np.einsum("abxy,abxy->", game.payoff, correlation.probs))


# --- measurements and game construction ----------------------------------------


def bell_projector_measurement(d: int) -> list[np.ndarray]:
    """Two-outcome measurement ``{P, I - P}`` with ``P`` onto ``|Phi_d+>`` of a factor pair."""
    P = max_entangled_projector(d)
    return [P, np.eye(d * d) - P]


def game_from_witness(dec: GammaDecomposition, p_x=None, q_y=None) -> SemiquantumGame:
    """Compile a witness decomposition into a two-outcome semiquantum game.

    Inputs are the transposed ensemble members and the payoff is
    ``gamma[x, y] / (p(x) q(y))`` on outcome pair (0, 0), zero elsewhere.
    Uniform input distributions are used when none are given.
    """
    nX, nY = dec.gamma.shape
    p_x = uniform(nX) if p_x is None else _distribution(p_x, "p_x")
    q_y = uniform(nY) if q_y is None else _distribution(q_y, "q_y")
    if p_x.size != nX or q_y.size != nY:
        raise ShapeError("input distributions do not match the decomposition")
    weight = np.outer(p_x, q_y)
    bad = (weight == 0) & (dec.gamma != 0)
    if np.any(bad):
        x, y = np.argwhere(bad)[0]
        raise ValueError(f"input pair ({x}, {y}) has zero probability but nonzero coefficient")
    payoff = np.zeros((2, 2, nX, nY))
    np.divide(dec.gamma, weight, out=payoff[0, 0], where=weight > 0)
    return SemiquantumGame(
        input_states_a=tuple(transpose_op(s) for s in dec.left.states),
        input_states_b=tuple(transpose_op(s) for s in dec.right.states),
        p_x=p_x,
        q_y=q_y,
        payoff=payoff,
    )


def bell_projector_payoff(game: SemiquantumGame, rho) -> float:
    """Average payoff when both parties use Bell-projector measurements.

    Uses ``Tr_X0[P_{XX0} (I (x) C^T)] = C / d`` to avoid the four-factor
    operator, so it scales to large local dimensions.
    """
    dA, dB = game.input_dims
    rho = check_density(rho, dA * dB)
    psi_t = np.array([s.T for s in game.input_states_a])
    phi_t = np.array([s.T for s in game.input_states_b])
    R = rho.reshape(dA, dB, dA, dB)
    overlaps = _real_table(np.einsum("xij,ykl,jlik->xy", psi_t, phi_t, R)) / (dA * dB)
    return float(np.einsum("xy,xy,x,y->", game.payoff[0, 0], overlaps, game.p_x, game.q_y))


def chsh_counterexample_game(d: int = COUNTEREXAMPLE_D) -> BellGame:
    """CHSH game with three-outcome projective measurements on ``C^d``.

    Outcomes 0 and 1 are rank-one projectors on the span of ``|0>, |1>``;
    outcome 2 is the complementary projector. The payoff is +1 when
    ``a XOR b == x*y``, -1 otherwise, and 0 whenever either outcome is 2.
    """
    e0, e1 = basis(d, 0), basis(d, 1)
    plus, minus = (e0 + e1) / np.sqrt(2), (e0 - e1) / np.sqrt(2)
    r2 = np.sqrt(2)
    alpha1 = ((1 + r2) * e0 + e1) / np.sqrt(4 + 2 * r2)
    alpha2 = ((1 - r2) * e0 + e1) / np.sqrt(4 - 2 * r2)
    beta1 = ((1 + r2) * e0 - e1) / np.sqrt(4 + 2 * r2)
    beta2 = ((1 - r2) * e0 - e1) / np.sqrt(4 - 2 * r2)

    def three_outcome(u, v):
        Pu, Pv = projector(u), projector(v)
        return [Pu, Pv, np.eye(d) - Pu - Pv]

    payoff = np.zeros((3, 3, 2, 2))
    for x in range(2):
        for y in range(2):
            for a in range(2):
                for b in range(2):
                    payoff[a, b, x, y] = 1.0 if (a ^ b) == x * y else -1.0
    return BellGame(
        p_x=uniform(2),
        q_y=uniform(2),
        measurements_a=(three_outcome(e0, e1), three_outcome(plus, minus)),
        measurements_b=(three_outcome(alpha1, alpha2), three_outcome(beta1, beta2)),
        payoff=payoff,
    )
