"""
Unit tests for the ensemble functional, finite-difference gradients, L-BFGS
and the divisor warm start.
"""
import numpy as np
import pytest
from scipy.optimize import rosen, rosen_der

from leakseq.exceptions import DependencyError, DomainError, NumericError
from leakseq.metrics import pe_metric_ensemble
from leakseq.noise import NoiseConfig, sample_ensemble, zero_ensemble
from leakseq.optimizer import (
    OptimizerOptions,
    bootstrap_guess,
    evaluate_sequence,
    functional_j,
    greatest_proper_divisor,
    lbfgs_minimize,
    numerical_gradient,
    optimize_sequence,
    solved_archive,
)
from leakseq.sequence_model import InteractionKind, SequenceParams, target_operator

TIGHT = OptimizerOptions(grad_tol=1e-10, rel_f_tol=1e-15)


def random_sequence(seed, n, interaction=InteractionKind.ZZ):
    rng = np.random.default_rng(seed)
    return SequenceParams.from_vector(interaction, rng.uniform(-np.pi, np.pi, 6 * n))


class TestOptimizerOptions:
    @pytest.mark.parametrize("name", ["history_size", "grad_tol", "rel_f_tol", "max_iterations", "fd_step_scale"])
    def test_non_positive(self, name):
        with pytest.raises(DomainError):
            OptimizerOptions(**{name: 0})

    def test_negative_restarts(self):
        with pytest.raises(DomainError):
            OptimizerOptions(restarts=-1)


class TestFunctional:
    """Tests for J = mean(gate error + D)."""

    def test_single_step_zero_rotations(self):
        assert functional_j(SequenceParams.zeros("zz", 1), zero_ensemble(1, 3)) == pytest.approx(2.0, abs=1e-9)

    def test_noiseless_value_is_pe_distance_of_target(self):
        seq = random_sequence(0, 3)
        expected = pe_metric_ensemble(target_operator(seq)[None])[0]
        assert functional_j(seq, zero_ensemble(3)) == pytest.approx(expected, abs=1e-10)

    def test_noise_adds_gate_error(self):
        seq = random_sequence(1, 2)
        ensemble = sample_ensemble(NoiseConfig(m_realizations=20, seed=3), 2)
        gate_error, _ = evaluate_sequence(seq, ensemble)
        assert gate_error > 0
        assert functional_j(seq, ensemble) >= gate_error

    def test_noiseless_evaluation(self):
        gate_error, pe_error = evaluate_sequence(SequenceParams.zeros("zz", 2), zero_ensemble(2, 2))
        assert gate_error == pytest.approx(0, abs=1e-12)
        assert pe_error == pytest.approx(1 - np.cos(np.pi / 8) ** 2, abs=1e-9)


class TestNumericalGradient:
    def test_constant(self):
        assert np.array_equal(numerical_gradient(lambda x: 3.0, np.array([0.5, -1.0])), np.zeros(2))

    def test_quadratic(self):
        g = numerical_gradient(lambda x: float(np.sum(x ** 2)), np.array([1.0, 2.0]))
        assert g == pytest.approx([2.0, 4.0], abs=1e-5)

    def test_non_finite_objective_names_coordinate(self):
        def f(x):
            return np.inf if x[1] > 2.0 else float(np.sum(x))

        with pytest.raises(NumericError) as info:
            numerical_gradient(f, np.array([1.0, 2.0, 3.0]))
        assert info.value.coordinate == 1

    def test_matches_central_differences(self):
        ensemble = sample_ensemble(NoiseConfig(m_realizations=10, seed=11), 3)
        rng = np.random.default_rng(12)
        h = 1e-6
        for _ in range(10):
            x = rng.uniform(-np.pi, np.pi, 18)

            def f(v):
                return functional_j(SequenceParams.from_vector("zz", v), ensemble)

            forward = numerical_gradient(f, x)
            central = np.array([(f(x + h * e) - f(x - h * e)) / (2 * h) for e in np.eye(18)])
            assert np.allclose(forward, central, rtol=1e-4, atol=1e-6)


class TestLBFGS:
    def test_quadratic(self):
        x, fx, diagnostics = lbfgs_minimize(
            lambda v: float(v @ v), lambda v: 2.0 * v, np.array([3.0, -4.0]), TIGHT
        )
        assert x == pytest.approx([0, 0], abs=1e-6)
        assert fx <= 1e-10
        assert diagnostics.history[0] == 25.0

    def test_rosenbrock(self):
        x, fx, _ = lbfgs_minimize(rosen, rosen_der, np.array([-1.2, 1.0]), TIGHT)
        assert x == pytest.approx([1.0, 1.0], abs=1e-5)

    def test_stationary_start(self):
        x0 = np.array([0.3, -0.7])
        x, fx, diagnostics = lbfgs_minimize(lambda v: 1.0, lambda v: np.zeros_like(v), x0)
        assert np.array_equal(x, x0)
        assert fx == 1.0
        assert diagnostics.converged

    def test_never_worse_than_start(self):
        rng = np.random.default_rng(4)
        for _ in range(5):
            x0 = rng.normal(size=3)
            _, fx, _ = lbfgs_minimize(rosen, rosen_der, x0, OptimizerOptions(max_iterations=3))
            assert fx <= rosen(x0)

    def test_empty_start(self):
        with pytest.raises(DomainError):
            lbfgs_minimize(rosen, rosen_der, np.array([]))


class TestBootstrap:
    @pytest.mark.parametrize("n, expected", [(1, 1), (2, 1), (4, 2), (7, 1), (9, 3), (12, 6), (15, 5), (16, 8)])
    def test_greatest_proper_divisor(self, n, expected):
        assert greatest_proper_divisor(n) == expected

    def test_tiles_divisor_solution(self):
        p2 = random_sequence(5, 2)
        guess = bootstrap_guess(4, {2: p2})
        assert guess.steps == p2.steps + p2.steps

    def test_prime_starts_from_zeros(self):
        guess = bootstrap_guess(7, {})
        assert guess.n_steps == 7
        assert not np.any(guess.to_vector())

    def test_uses_greatest_divisor(self):
        p6 = random_sequence(6, 6)
        guess = bootstrap_guess(12, {6: p6, 4: random_sequence(7, 4), 3: random_sequence(8, 3)})
        assert guess.steps == p6.steps * 2

    def test_missing_divisor(self):
        with pytest.raises(DependencyError) as info:
            bootstrap_guess(12, {4: random_sequence(9, 4)})
        assert info.value.divisor == 6

    def test_interaction_mismatch(self):
        with pytest.raises(DomainError):
            bootstrap_guess(4, {2: random_sequence(10, 2, InteractionKind.XX_PLUS_YY)}, InteractionKind.ZZ)

    def test_warm_start_value_matches_source(self):
        p3 = random_sequence(13, 3)
        guess = bootstrap_guess(6, {3: p3})
        assert functional_j(guess, zero_ensemble(6)) == pytest.approx(functional_j(p3.tiled(2), zero_ensemble(6)), abs=1e-12)


class TestOptimizeSequence:
    """Short runs of the full local search."""

    def test_noiseless_two_step_sequence(self):
        config = NoiseConfig(sigma_logical=0.0, sigma_leakage=0.0, m_realizations=2, seed=1)
        result = optimize_sequence(2, "zz", config, OptimizerOptions(max_iterations=50), eval_m=3)
        assert result.out_of_sample_gate_error == pytest.approx(0, abs=1e-12)
        assert result.in_sample_gate_error == pytest.approx(0, abs=1e-12)
        assert result.eval_seed == 2 and result.eval_m == 3

    def test_deterministic(self):
        config = NoiseConfig(m_realizations=3, seed=21)
        opts = OptimizerOptions(max_iterations=10)
        a = optimize_sequence(3, "zz", config, opts, eval_m=4)
        b = optimize_sequence(3, "zz", config, opts, eval_m=4)
        assert np.array_equal(a.params.to_vector(), b.params.to_vector())
        assert a.out_of_sample_gate_error == b.out_of_sample_gate_error
        assert a.j_value == b.j_value

    def test_restarts_never_hurt(self):
        config = NoiseConfig(m_realizations=2, seed=22)
        plain = optimize_sequence(3, "zz", config, OptimizerOptions(max_iterations=10))
        restarted = optimize_sequence(3, "zz", config, OptimizerOptions(max_iterations=10, restarts=1))
        assert restarted.j_value <= plain.j_value

    def test_missing_warm_start(self):
        with pytest.raises(DependencyError):
            optimize_sequence(4, "zz", NoiseConfig(m_realizations=1), archive={})

    def test_solved_archive(self):
        config = NoiseConfig(m_realizations=1, seed=23)
        result = optimize_sequence(1, "zz", config, OptimizerOptions(max_iterations=5))
        assert solved_archive({1: result}) == {1: result.params}

    @pytest.mark.slow
    def test_three_steps_reach_perfect_entangler(self):
        config = NoiseConfig(m_realizations=10, seed=24)
        result = optimize_sequence(3, "zz", config, OptimizerOptions(restarts=3), eval_m=100)
        assert result.in_sample_pe_error <= 1e-6

    @pytest.mark.slow
    def test_sixteen_steps_beat_baseline(self):
        config = NoiseConfig(m_realizations=100, seed=25)
        archive = {}
        for n in (2, 4, 8, 16):
            archive[n] = optimize_sequence(n, "zz", config, archive=archive, eval_m=1000).params
        gate_error, pe_error = evaluate_sequence(archive[16], sample_ensemble(config.replace(seed=26, m_realizations=1000), 16))
        assert gate_error < 0.05
        assert pe_error <= 1e-6
