import numpy as np
import pytest

from schmidt_cert.decompose import canonical_qutrit_ensemble, solve_gamma, standard_ensemble
from schmidt_cert.games import (
    BellGame,
    CorrelationTable,
    SemiquantumGame,
    ShapeError,
    average_payoff,
    bell_correlation,
    bell_functional,
    bell_projector_measurement,
    bell_projector_payoff,
    chsh_counterexample_game,
    game_from_witness,
    semiquantum_correlation,
    uniform,
)
from schmidt_cert.qlinalg import (
    DimensionError,
    InvalidOperatorError,
    basis,
    kron,
    max_entangled,
    partial_trace,
    projector,
    random_density,
)
from schmidt_cert.schmidt import counterexample_state, isotropic_state, optimal_witness


@pytest.fixture(scope="module")
def compiled():
    ens = canonical_qutrit_ensemble()
    return game_from_witness(solve_gamma(optimal_witness(3, 2), ens, ens))


def _qubit_chsh():
    z = [projector(basis(2, 0)), projector(basis(2, 1))]
    x = [projector(np.array([1, 1]) / np.sqrt(2)), projector(np.array([1, -1]) / np.sqrt(2))]
    c, s = np.cos(np.pi / 8), np.sin(np.pi / 8)
    b0 = [projector([c, s]), projector([-s, c])]
    b1 = [projector([c, -s]), projector([s, c])]
    payoff = np.array([[[[1 if (a ^ b) == xx * yy else -1 for yy in range(2)] for xx in range(2)]
                        for b in range(2)] for a in range(2)], dtype=float)
    return BellGame(uniform(2), uniform(2), (z, x), (b0, b1), payoff)


class TestCorrelationTable:
    def test_rejects_unnormalized(self):
        with pytest.raises(InvalidOperatorError):
            CorrelationTable(np.full((2, 2, 1, 1), 0.3))

    def test_rejects_wrong_rank(self):
        with pytest.raises(ShapeError):
            CorrelationTable(np.ones((2, 2)))

    def test_rows_order(self):
        p = np.zeros((2, 2, 1, 2))
        p[0, 0, 0, 0] = p[1, 1, 0, 1] = 1.0
        rows = list(CorrelationTable(p).rows())
        assert rows[0] == (0, 0, 0, 0, 1.0)
        assert rows[-1] == (0, 1, 1, 1, 1.0)


class TestBellGame:
    def test_tsirelson(self):
        game = _qubit_chsh()
        corr = bell_correlation(game, projector(max_entangled(2)))
        assert abs(bell_functional(game, corr) - 2 * np.sqrt(2)) < 1e-12
        assert abs(average_payoff(game, corr) - np.sqrt(2) / 2) < 1e-12

    def test_product_state_factorizes(self, rng):
        game = _qubit_chsh()
        ra, rb = random_density(2, rng), random_density(2, rng)
        probs = bell_correlation(game, kron(ra, rb)).probs
        for x in range(2):
            for y in range(2):
                pa = [np.trace(e @ ra).real for e in game.measurements_a[x]]
                pb = [np.trace(e @ rb).real for e in game.measurements_b[y]]
                np.testing.assert_allclose(probs[:, :, x, y], np.outer(pa, pb), atol=1e-12)

    def test_no_signaling(self, rng):
        corr = bell_correlation(_qubit_chsh(), random_density(4, rng))
        assert corr.no_signaling_residual() < 1e-12

    def test_zero_payoff(self, rng):
        g = _qubit_chsh()
        zero = BellGame(g.p_x, g.q_y, g.measurements_a, g.measurements_b, np.zeros_like(g.payoff))
        assert average_payoff(zero, bell_correlation(zero, random_density(4, rng))) == 0.0

    def test_shape_errors(self):
        g = _qubit_chsh()
        with pytest.raises(ShapeError):
            BellGame(g.p_x, g.q_y, g.measurements_a, g.measurements_b, np.zeros((2, 2, 2, 3)))
        with pytest.raises(ValueError):
            BellGame([0.7, 0.7], g.q_y, g.measurements_a, g.measurements_b, g.payoff)


class TestChshCounterexample:
    def test_povms_complete(self):
        game = chsh_counterexample_game()
        for m in game.measurements_a + game.measurements_b:
            np.testing.assert_allclose(sum(m), np.eye(8), atol=1e-12)

    def test_endpoints(self):
        game = chsh_counterexample_game()
        v0 = bell_functional(game, bell_correlation(game, counterexample_state(0.0)))
        v1 = bell_functional(game, bell_correlation(game, counterexample_state(1.0)))
        assert abs(v0 - 2 * np.sqrt(2)) < 1e-12
        # only the qubit block of the isotropic part scores: 0.24 * 2sqrt2 / 4 + 0
        assert abs(v1 - 0.24 * 2 * np.sqrt(2) / 4) < 1e-12

    def test_crossing(self):
        game = chsh_counterexample_game()
        v0, v1 = 2 * np.sqrt(2), 0.06 * 2 * np.sqrt(2)
        lam = (v0 - 2) / (v0 - v1)
        val = bell_functional(game, bell_correlation(game, counterexample_state(lam)))
        assert abs(val - 2) < 1e-12
        assert abs(lam - 0.3116) < 1e-3

    def test_no_signaling(self):
        game = chsh_counterexample_game()
        assert bell_correlation(game, counterexample_state(0.4)).no_signaling_residual() < 1e-12


class TestBellProjector:
    @pytest.mark.parametrize("d", [1, 2, 3])
    def test_complement(self, d):
        P, Q = bell_projector_measurement(d)
        np.testing.assert_allclose(P + Q, np.eye(d * d), atol=1e-15)
        ev = np.linalg.eigvalsh(Q)
        assert np.sum(np.abs(ev - 1) < 1e-12) == d * d - 1

    def test_partial_trace_identity(self, rng):
        # Tr_X0[P (I (x) C^T)] = C / d for arbitrary C
        P = bell_projector_measurement(3)[0]
        for _ in range(20):
            C = rng.normal(size=(3, 3)) + 1j * rng.normal(size=(3, 3))
            out = partial_trace(P @ np.kron(np.eye(3), C.T), [3, 3], keep=[0])
            np.testing.assert_allclose(out, C / 3, atol=1e-12)


class TestCompiledGame:
    def test_inputs_are_transposes(self, compiled):
        ens = canonical_qutrit_ensemble()
        for k in (6, 7, 8):
            np.testing.assert_allclose(compiled.input_states_a[k], ens.states[k].T, atol=1e-15)
            assert not np.allclose(compiled.input_states_a[k], ens.states[k])

    def test_payoff_structure(self, compiled):
        assert compiled.outcomes == (2, 2)
        assert not np.any(compiled.payoff[1]) and not np.any(compiled.payoff[0, 1])
        assert abs(compiled.payoff[0, 0, 0, 0] - 81 * 0.5) < 1e-9

    def test_isotropic_payoff(self, compiled):
        P = bell_projector_measurement(3)
        for lam in (0.0, 0.5, 0.625, 0.9, 1.0):
            corr = semiquantum_correlation(compiled, isotropic_state(3, lam), P, P)
            assert abs(average_payoff(compiled, corr) - (5 - 8 * lam) / 54) < 1e-12

    def test_maximally_mixed(self, compiled):
        P = bell_projector_measurement(3)
        corr = semiquantum_correlation(compiled, np.eye(9) / 9, P, P)
        assert abs(average_payoff(compiled, corr) - np.trace(optimal_witness(3, 2).op).real / 81) < 1e-12

    def test_dense_matches_contract(self, compiled, rng):
        rho = random_density(9, rng)
        P = bell_projector_measurement(3)
        a = semiquantum_correlation(compiled, rho, P, P, method="contract").probs
        b = semiquantum_correlation(compiled, rho, P, P, method="dense").probs
        np.testing.assert_allclose(a, b, atol=1e-12)

    def test_analytic_path(self, compiled, rng):
        rho = random_density(9, rng)
        P = bell_projector_measurement(3)
        direct = average_payoff(compiled, semiquantum_correlation(compiled, rho, P, P))
        assert abs(bell_projector_payoff(compiled, rho) - direct) < 1e-12

    def test_trivial_measurement(self, compiled, rng):
        # outcome 0 always: payoff is sum gamma
        ma = [np.eye(9), np.zeros((9, 9))]
        corr = semiquantum_correlation(compiled, random_density(9, rng), ma, ma)
        ens = canonical_qutrit_ensemble()
        gamma = solve_gamma(optimal_witness(3, 2), ens, ens).gamma
        assert abs(average_payoff(compiled, corr) - gamma.sum()) < 1e-9

    def test_linear_in_state(self, compiled, rng):
        P = bell_projector_measurement(3)
        r1, r2 = random_density(9, rng), random_density(9, rng)

        def f(r):
            return average_payoff(compiled, semiquantum_correlation(compiled, r, P, P))

        assert abs(f(0.3 * r1 + 0.7 * r2) - 0.3 * f(r1) - 0.7 * f(r2)) < 1e-12

    def test_custom_distribution(self):
        ens = standard_ensemble(2)
        dec = solve_gamma(optimal_witness(2, 1), ens, ens)
        p = np.array([0.1, 0.2, 0.3, 0.4])
        game = game_from_witness(dec, p, uniform(4))
        P = bell_projector_measurement(2)
        rho = isotropic_state(2, 0.8)
        val = average_payoff(game, semiquantum_correlation(game, rho, P, P))
        assert abs(val - np.trace(optimal_witness(2, 1).op @ rho).real / 4) < 1e-12

    def test_zero_probability_rejected(self):
        ens = standard_ensemble(2)
        dec = solve_gamma(optimal_witness(2, 1), ens, ens)
        with pytest.raises(ValueError):
            game_from_witness(dec, [0.0, 0.5, 0.25, 0.25])

    def test_dimension_errors(self, compiled):
        P = bell_projector_measurement(3)
        with pytest.raises(DimensionError):
            semiquantum_correlation(compiled, np.eye(4) / 4, P, P)
        with pytest.raises(DimensionError):
            semiquantum_correlation(compiled, np.eye(9) / 9, [np.eye(8), np.zeros((8, 8))], P)

    def test_dense_limit(self):
        # 11**4 exceeds the dense limit; the check fires before any work is done
        ens = standard_ensemble(11)
        game = SemiquantumGame(ens.states[:1], ens.states[:1], [1.0], [1.0], np.zeros((2, 2, 1, 1)))
        P = bell_projector_measurement(11)
        with pytest.raises(ValueError):
            semiquantum_correlation(game, np.eye(121) / 121, P, P, method="dense")
