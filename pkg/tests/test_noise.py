"""
Unit tests for noise sampling, the Delta generator and local-rotation fidelity.
"""
import numpy as np
import pytest

from leakseq.exceptions import DomainError
from leakseq.noise import (
    CHANNELS,
    LOGICAL_CHANNELS,
    NoiseConfig,
    NoiseRealization,
    build_delta,
    channel_scales,
    local_rotation_fidelity,
    sample_ensemble,
)
from leakseq.sequence_model import InteractionKind


class TestNoiseConfig:
    @pytest.mark.parametrize("name", ["sigma_logical", "sigma_leakage", "sigma_local"])
    def test_negative_sigma(self, name):
        with pytest.raises(DomainError):
            NoiseConfig(**{name: -0.1})

    def test_empty_ensemble(self):
        with pytest.raises(DomainError):
            NoiseConfig(m_realizations=0)

    def test_dict_round_trip(self):
        config = NoiseConfig(sigma_local=0.002, local_enabled=True, virtual_z=True, seed=99)
        assert NoiseConfig.from_dict(config.to_dict()) == config

    def test_nonlocal_only(self):
        config = NoiseConfig.nonlocal_only(0.03, m_realizations=5)
        assert config.sigma_logical == config.sigma_leakage == 0.03
        assert not config.local_enabled


class TestSampleEnsemble:
    """Tests for drawing frozen realizations."""

    def test_zero_sigma_gives_zero_coefficients(self):
        ensemble = sample_ensemble(NoiseConfig(sigma_logical=0, sigma_leakage=0, m_realizations=4), 3)
        for r in ensemble.realizations:
            assert np.all(r.nonlocal_coefficients == 0)

    def test_channel_counts(self):
        assert len(CHANNELS) == 80
        assert int(LOGICAL_CHANNELS.sum()) == 15
        assert int((~LOGICAL_CHANNELS).sum()) == 65
        assert (0, 0) not in CHANNELS

    def test_channel_scales(self):
        scales = channel_scales(NoiseConfig(sigma_logical=0.01, sigma_leakage=0.2))
        assert np.all(scales[LOGICAL_CHANNELS] == 0.01)
        assert np.all(scales[~LOGICAL_CHANNELS] == 0.2)

    def test_only_leakage_channels_when_logical_sigma_is_zero(self):
        ensemble = sample_ensemble(NoiseConfig(sigma_logical=0.0, sigma_leakage=0.065, m_realizations=10), 2)
        for r in ensemble.realizations:
            assert np.all(r.nonlocal_coefficients[LOGICAL_CHANNELS] == 0)
            assert np.all(r.nonlocal_coefficients[~LOGICAL_CHANNELS] != 0)

    def test_deterministic(self):
        config = NoiseConfig(sigma_local=0.002, local_enabled=True, m_realizations=5, seed=42)
        a, b = sample_ensemble(config, 4), sample_ensemble(config, 4)
        for ra, rb in zip(a.realizations, b.realizations):
            assert np.array_equal(ra.nonlocal_coefficients, rb.nonlocal_coefficients)
            assert np.array_equal(ra.local_logical, rb.local_logical)
            assert np.array_equal(ra.local_leakage, rb.local_leakage)

    def test_different_seeds_differ(self):
        a = sample_ensemble(NoiseConfig(m_realizations=1, seed=1), 1)
        b = sample_ensemble(NoiseConfig(m_realizations=1, seed=2), 1)
        assert not np.array_equal(a.realizations[0].nonlocal_coefficients, b.realizations[0].nonlocal_coefficients)

    def test_sample_statistics(self):
        config = NoiseConfig(sigma_logical=0.03, sigma_leakage=0.065, m_realizations=10000, seed=3)
        ensemble = sample_ensemble(config, 1)
        coefficients = np.array([r.nonlocal_coefficients for r in ensemble.realizations])
        std = coefficients.std(axis=0)
        assert np.all(np.abs(std / channel_scales(config) - 1) < 0.05)

    def test_virtual_z_zeroes_gamma_coefficients(self):
        config = NoiseConfig(sigma_local=0.002, local_enabled=True, virtual_z=True, m_realizations=20, seed=8)
        for r in sample_ensemble(config, 5).realizations:
            assert np.all(r.local_logical[:, [2, 5]] == 0)
            assert np.all(r.local_logical[:, [0, 1, 3, 4]] != 0)

    def test_shared_local_coefficient(self):
        config = NoiseConfig(sigma_local=0.01, local_enabled=True, shared_local_coefficient=True, m_realizations=3)
        for r in sample_ensemble(config, 4).realizations:
            assert np.all(r.local_logical == r.local_logical[:, :1])

    def test_local_noise_disabled(self):
        r = sample_ensemble(NoiseConfig(m_realizations=1), 2).realizations[0]
        assert r.local_logical is None and r.local_leakage is None
        assert r.local_draw(0) is None

    def test_step_factors_are_cached(self):
        ensemble = sample_ensemble(NoiseConfig(m_realizations=3), 2)
        first = ensemble.step_factors(InteractionKind.ZZ)
        assert first.shape == (3, 9, 9)
        assert ensemble.step_factors("zz") is first
        assert ensemble.step_factors(InteractionKind.XX_PLUS_YY) is not first

    def test_invalid_length(self):
        with pytest.raises(DomainError):
            sample_ensemble(NoiseConfig(), 0)


class TestNoiseRealization:
    def test_coefficient_count(self):
        with pytest.raises(DomainError):
            NoiseRealization(n_steps=1, nonlocal_coefficients=np.zeros(81))

    def test_local_shape(self):
        with pytest.raises(DomainError):
            NoiseRealization(n_steps=2, nonlocal_coefficients=np.zeros(80), local_logical=np.zeros((3, 6)))


class TestBuildDelta:
    def test_zero(self):
        assert np.array_equal(build_delta(np.zeros(80)), np.zeros((9, 9)))

    def test_single_zz_channel(self):
        coefficients = np.zeros(80)
        coefficients[CHANNELS.index((3, 3))] = 0.5
        assert np.allclose(build_delta(coefficients), 0.5 * np.diag([1, -1, 0, -1, 1, 0, 0, 0, 0]))

    def test_hermitian_traceless(self):
        delta = build_delta(np.random.default_rng(0).normal(size=80))
        assert np.max(np.abs(delta - delta.conj().T)) <= 1e-14
        assert abs(np.trace(delta)) <= 1e-13

    def test_linear(self):
        rng = np.random.default_rng(1)
        x, y = rng.normal(size=80), rng.normal(size=80)
        assert np.allclose(build_delta(2.0 * x - 0.5 * y), 2.0 * build_delta(x) - 0.5 * build_delta(y), atol=1e-14)

    def test_wrong_length(self):
        with pytest.raises(DomainError):
            build_delta(np.zeros(79))


class TestLocalRotationFidelity:
    def test_noiseless(self):
        assert local_rotation_fidelity(0.0) == 1.0

    def test_monotone_in_sigma(self):
        weak = local_rotation_fidelity(0.002, 100, 100, seed=1)
        strong = local_rotation_fidelity(0.004, 100, 100, seed=1)
        assert strong < weak < 1.0

    def test_quick_estimate(self):
        assert 0.998 <= local_rotation_fidelity(0.002, 200, 200, seed=2) <= 0.9995

    @pytest.mark.slow
    def test_full_estimate(self):
        assert local_rotation_fidelity(0.002, 1000, 1000, seed=0) == pytest.approx(0.999, abs=5e-4)

    def test_negative_sigma(self):
        with pytest.raises(DomainError):
            local_rotation_fidelity(-0.1)
