"""
Unit tests for rotations, drift slices and sequence evolution operators.
"""
import numpy as np
import pytest
from scipy.linalg import expm

from leakseq.exceptions import DomainError
from leakseq.metrics import project_logical
from leakseq.noise import CHANNELS, LocalNoiseDraw, NoiseConfig, NoiseRealization, sample_ensemble, zero_ensemble
from leakseq.sequence_model import (
    InteractionKind,
    RotationParams,
    SequenceParams,
    apply_local_noise,
    drift_step,
    evolution_operator,
    evolution_operators,
    rotation_operator,
    target_operator,
)
from leakseq.su_algebra import expi_hermitian, gell_mann, is_unitary, kron

ZZ_FULL = np.diag([-1, -1, 1, -1, -1, 1, 1, 1, 1]).astype(complex)
SIGMA = (
    np.array([[0, 1], [1, 0]], dtype=complex),
    np.array([[0, -1j], [1j, 0]], dtype=complex),
    np.array([[1, 0], [0, -1]], dtype=complex),
)


def pauli_rotation(a, b, c):
    return expm(1j * (a * SIGMA[0] + b * SIGMA[1] + c * SIGMA[2]))


def random_sequence(rng, n, interaction=InteractionKind.ZZ):
    return SequenceParams.from_vector(interaction, rng.uniform(-np.pi, np.pi, 6 * n))


class TestRotationOperator:
    """Tests for the interleaved local rotations."""

    def test_zero_angles(self):
        assert np.allclose(rotation_operator(RotationParams()), np.eye(9))

    def test_half_pi_first_qutrit(self):
        expected = kron(np.array([[0, 1j, 0], [1j, 0, 0], [0, 0, 1]]), np.eye(3))
        assert np.allclose(rotation_operator(RotationParams(np.pi / 2)), expected)

    def test_logical_block_is_pauli_product(self):
        rng = np.random.default_rng(11)
        for _ in range(20):
            angles = rng.uniform(-2 * np.pi, 2 * np.pi, 6)
            p = RotationParams.from_array(angles)
            expected = np.kron(pauli_rotation(*angles[:3]), pauli_rotation(*angles[3:]))
            assert np.allclose(project_logical(rotation_operator(p)), expected, atol=1e-12)

    def test_non_finite_angle(self):
        with pytest.raises(DomainError):
            RotationParams(alpha1=np.inf)

    def test_wrong_angle_count(self):
        with pytest.raises(DomainError):
            RotationParams.from_array([0.0] * 5)


class TestSequenceParams:
    def test_vector_layout_is_step_major(self):
        x = np.arange(12, dtype=float)
        seq = SequenceParams.from_vector("zz", x)
        assert seq.n_steps == 2
        assert seq.steps[1].alpha1 == 6.0 and seq.steps[0].gamma2 == 5.0
        assert np.array_equal(seq.to_vector(), x)

    @pytest.mark.parametrize("size", [0, 5, 13])
    def test_bad_vector_length(self, size):
        with pytest.raises(DomainError):
            SequenceParams.from_vector(InteractionKind.ZZ, np.zeros(size))

    def test_tiled(self):
        seq = random_sequence(np.random.default_rng(0), 2)
        tiled = seq.tiled(3)
        assert tiled.n_steps == 6
        assert tiled.steps == seq.steps * 3


class TestDriftStep:
    def test_single_step_zz(self):
        assert np.allclose(drift_step(1, InteractionKind.ZZ), ZZ_FULL, atol=1e-12)

    def test_two_steps_zz_logical_block(self):
        block = project_logical(drift_step(2, InteractionKind.ZZ))
        assert np.allclose(block, np.diag([-1j, 1j, 1j, -1j]), atol=1e-12)

    def test_single_step_xx_plus_yy(self):
        u = drift_step(1, InteractionKind.XX_PLUS_YY)
        generator = kron(gell_mann(1), gell_mann(1)) + kron(gell_mann(2), gell_mann(2))
        assert is_unitary(u)
        assert np.allclose(u, expi_hermitian(generator, -np.pi))

    def test_invalid_length(self):
        with pytest.raises(DomainError):
            drift_step(0)


class TestTargetOperator:
    def test_single_step_zero_rotations(self):
        assert np.allclose(target_operator(SequenceParams.zeros("zz", 1)), ZZ_FULL, atol=1e-12)

    def test_roots_compose(self):
        one = target_operator(SequenceParams.zeros("zz", 1))
        two = target_operator(SequenceParams.zeros("zz", 2))
        assert np.allclose(one, two, atol=1e-12)

    def test_unitary(self):
        rng = np.random.default_rng(7)
        for n in (1, 3, 8):
            assert is_unitary(target_operator(random_sequence(rng, n)), 1e-12)

    def test_first_step_is_rightmost(self):
        rng = np.random.default_rng(8)
        seq = random_sequence(rng, 2)
        drift = drift_step(2, InteractionKind.ZZ)
        expected = drift @ rotation_operator(seq.steps[1]) @ drift @ rotation_operator(seq.steps[0])
        assert np.allclose(target_operator(seq), expected, atol=1e-12)


class TestEvolutionOperator:
    """Tests for the noisy sequence of one frozen realization."""

    def test_zero_noise_equals_target(self):
        seq = random_sequence(np.random.default_rng(9), 4)
        noise = zero_ensemble(4).realizations[0]
        assert np.allclose(evolution_operator(seq, noise), target_operator(seq), atol=1e-13, rtol=0)

    def test_single_diagonal_channel(self):
        theta = 0.37
        coefficients = np.zeros(len(CHANNELS))
        coefficients[CHANNELS.index((3, 3))] = theta
        noise = NoiseRealization(n_steps=1, nonlocal_coefficients=coefficients)
        u = evolution_operator(SequenceParams.zeros("zz", 1), noise)
        expected = expi_hermitian(kron(gell_mann(3), gell_mann(3)), -(np.pi + theta))
        assert np.allclose(u, expected, atol=1e-12)

    def test_single_step_order(self):
        rng = np.random.default_rng(10)
        config = NoiseConfig(sigma_local=0.01, local_enabled=True, m_realizations=1, seed=4)
        noise = sample_ensemble(config, 1).realizations[0]
        seq = random_sequence(rng, 1)
        rotation = apply_local_noise(seq.steps[0], noise.local_draw(0))
        expected = drift_step(1) @ noise.nonlocal_factor @ rotation
        assert np.allclose(evolution_operator(seq, noise), expected, atol=1e-14, rtol=0)

    def test_unitary_under_random_noise(self):
        rng = np.random.default_rng(12)
        config = NoiseConfig(sigma_local=0.05, local_enabled=True, m_realizations=50, seed=5)
        ensemble = sample_ensemble(config, 3)
        seq = random_sequence(rng, 3)
        for noise in ensemble.realizations:
            assert is_unitary(evolution_operator(seq, noise), 1e-12)

    def test_length_mismatch(self):
        with pytest.raises(DomainError):
            evolution_operator(SequenceParams.zeros("zz", 2), zero_ensemble(3).realizations[0])

    @pytest.mark.parametrize("local", [False, True])
    @pytest.mark.parametrize("interaction", list(InteractionKind))
    def test_batched_matches_per_realization(self, local, interaction):
        rng = np.random.default_rng(13)
        config = NoiseConfig(sigma_local=0.02, local_enabled=local, m_realizations=6, seed=6)
        ensemble = sample_ensemble(config, 3)
        seq = random_sequence(rng, 3, interaction)
        batched = evolution_operators(seq, ensemble)
        for u, noise in zip(batched, ensemble.realizations):
            assert np.allclose(u, evolution_operator(seq, noise), atol=1e-13, rtol=0)


class TestLocalNoise:
    def test_zero_coefficients(self):
        p = RotationParams(0.4, -0.2, 1.3, 0.0, 2.2, -0.7)
        draw = LocalNoiseDraw(logical=np.zeros(6), leakage=np.zeros((2, 5)))
        assert np.allclose(apply_local_noise(p, draw), rotation_operator(p), atol=1e-14)

    def test_zero_angles_kill_leakage_factor(self):
        draw = LocalNoiseDraw(logical=np.full(6, 0.3), leakage=np.full((2, 5), 0.5))
        assert np.allclose(apply_local_noise(RotationParams(), draw), np.eye(9), atol=1e-14)

    def test_single_leakage_generator(self):
        p = RotationParams(np.pi)
        leakage = np.zeros((2, 5))
        leakage[0, 0] = 0.1
        draw = LocalNoiseDraw(logical=np.zeros(6), leakage=leakage)
        factor = kron(expi_hermitian(gell_mann(4), np.pi * 0.1), np.eye(3))
        assert np.allclose(apply_local_noise(p, draw), factor @ rotation_operator(p), atol=1e-13)

    def test_gamma_excluded_from_magnitude(self):
        p = RotationParams(gamma1=0.8)
        leakage = np.zeros((2, 5))
        leakage[0, 2] = 0.2
        draw = LocalNoiseDraw(logical=np.zeros(6), leakage=leakage)
        assert np.allclose(apply_local_noise(p, draw, gamma_in_magnitude=False), rotation_operator(p), atol=1e-14)
        assert not np.allclose(apply_local_noise(p, draw, gamma_in_magnitude=True), rotation_operator(p))
