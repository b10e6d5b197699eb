"""
Frozen Monte-Carlo noise ensembles.

Nonlocal noise is a random Hermitian generator over the 80 two-qutrit
channels lambda_i (x) lambda_j, (i, j) != (0, 0). Channels with both
indices in {0, 1, 2, 3} act inside the logical subspace; the other 65
couple to the leakage levels. Local noise perturbs the interleaved
rotations (multiplicative angle error plus a leakage factor).
"""

import logging
from dataclasses import asdict, dataclass, field, replace
from functools import cached_property, lru_cache
from typing import Any, Dict, Optional, Tuple

import numpy as np

from .exceptions import DomainError
from .sequence_model import GAMMA_INDICES, InteractionKind, drift_step, leakage_factor, rotation_magnitudes
from .su_algebra import expi_hermitian, gell_mann, kron, su2_block_exp

logger = logging.getLogger(__name__)

RNG_ALGORITHM = "numpy.random.PCG64"

CHANNELS: Tuple[Tuple[int, int], ...] = tuple(
    (i, j) for i in range(9) for j in range(9) if (i, j) != (0, 0)
)
LOGICAL_CHANNELS = np.array([i < 4 and j < 4 for i, j in CHANNELS])
LOGICAL_CHANNELS.flags.writeable = False


@lru_cache(maxsize=None)
def channel_basis() -> np.ndarray:
    """(80, 9, 9) stack of lambda_i (x) lambda_j in CHANNELS order"""
    basis = np.array([kron(gell_mann(i), gell_mann(j)) for i, j in CHANNELS])
    basis.flags.writeable = False
    return basis


@dataclass(frozen=True)
class NoiseConfig:
    sigma_logical: float = 0.065
    sigma_leakage: float = 0.065
    sigma_local: float = 0.0
    local_enabled: bool = False
    virtual_z: bool = False
    m_realizations: int = 100
    seed: int = 0
    # one delta_eta per step shared by all six angles instead of one per angle
    shared_local_coefficient: bool = False
    # whether gamma angles count towards the leakage-factor magnitudes
    gamma_in_magnitude: bool = True

    def __post_init__(self):
        for name in ("sigma_logical", "sigma_leakage", "sigma_local"):
            value = float(getattr(self, name))
            if not np.isfinite(value) or value < 0:
                raise DomainError(f"{name} must be a finite non-negative number, got {value}")
            object.__setattr__(self, name, value)
        if int(self.m_realizations) < 1:
            raise DomainError(f"m_realizations must be >= 1, got {self.m_realizations}")
        object.__setattr__(self, "m_realizations", int(self.m_realizations))
        if int(self.seed) < 0:
            raise DomainError(f"seed must be non-negative, got {self.seed}")
        object.__setattr__(self, "seed", int(self.seed))

    @classmethod
    def nonlocal_only(cls, sigma: float, **kwargs) -> "NoiseConfig":
        return cls(sigma_logical=sigma, sigma_leakage=sigma, **kwargs)

    def with_seed(self, seed: int) -> "NoiseConfig":
        return replace(self, seed=seed)

    def replace(self, **changes) -> "NoiseConfig":
        return replace(self, **changes)

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "NoiseConfig":
        return cls(**data)


@dataclass(frozen=True)
class LocalNoiseDraw:
    """Local control noise of one step: 6 angle coefficients and 2x5 leakage coefficients"""

    logical: np.ndarray
    leakage: np.ndarray


@dataclass(frozen=True, eq=False)
class NoiseRealization:
    n_steps: int
    nonlocal_coefficients: np.ndarray
    local_logical: Optional[np.ndarray] = None
    local_leakage: Optional[np.ndarray] = None

    def __post_init__(self):
        coefficients = np.asarray(self.nonlocal_coefficients, dtype=float)
        if coefficients.shape != (len(CHANNELS),):
            raise DomainError(f"expected {len(CHANNELS)} nonlocal coefficients, got shape {coefficients.shape}")
        object.__setattr__(self, "nonlocal_coefficients", coefficients)
        if self.local_logical is not None:
            logical = np.asarray(self.local_logical, dtype=float)
            if logical.shape != (self.n_steps, 6):
                raise DomainError(f"local_logical must have shape ({self.n_steps}, 6), got {logical.shape}")
            object.__setattr__(self, "local_logical", logical)
        if self.local_leakage is not None:
            leakage = np.asarray(self.local_leakage, dtype=float)
            if leakage.shape != (self.n_steps, 2, 5):
                raise DomainError(f"local_leakage must have shape ({self.n_steps}, 2, 5), got {leakage.shape}")
            object.__setattr__(self, "local_leakage", leakage)

    @cached_property
    def delta(self) -> np.ndarray:
        return build_delta(self.nonlocal_coefficients)

    @cached_property
    def nonlocal_factor(self) -> np.ndarray:
        """exp(-i*Delta/N), computed once per realization"""
        return expi_hermitian(self.delta, -1.0 / self.n_steps)

    def local_draw(self, step: int) -> Optional[LocalNoiseDraw]:
        if self.local_logical is None and self.local_leakage is None:
            return None
        logical = self.local_logical[step] if self.local_logical is not None else np.zeros(6)
        leakage = self.local_leakage[step] if self.local_leakage is not None else np.zeros((2, 5))
        return LocalNoiseDraw(logical=logical, leakage=leakage)


@dataclass(frozen=True, eq=False)
class NoiseEnsemble:
    """The fixed set of realizations the functional averages over"""

    config: NoiseConfig
    n_steps: int
    realizations: Tuple[NoiseRealization, ...] = field(repr=False)
    _step_factor_cache: Dict[InteractionKind, np.ndarray] = field(default_factory=dict, init=False, repr=False)

    def __len__(self) -> int:
        return len(self.realizations)

    @cached_property
    def nonlocal_factors(self) -> np.ndarray:
        factors = np.array([r.nonlocal_factor for r in self.realizations])
        factors.flags.writeable = False
        return factors

    @cached_property
    def local_logical(self) -> Optional[np.ndarray]:
        if self.realizations[0].local_logical is None:
            return None
        return np.array([r.local_logical for r in self.realizations])

    @cached_property
    def local_leakage(self) -> Optional[np.ndarray]:
        if self.realizations[0].local_leakage is None:
            return None
        return np.array([r.local_leakage for r in self.realizations])

    def step_factors(self, kind: InteractionKind) -> np.ndarray:
        """drift @ exp(-i*Delta/N) per realization, shape (M, 9, 9)"""
        kind = InteractionKind(kind)
        cache = self._step_factor_cache
        if kind not in cache:
            factors = drift_step(self.n_steps, kind) @ self.nonlocal_factors
            factors.flags.writeable = False
            cache[kind] = factors
        return cache[kind]


def build_delta(coefficients) -> np.ndarray:
    """Delta = sum_ij delta_ij lambda_i (x) lambda_j"""
    coefficients = np.asarray(coefficients, dtype=float)
    if coefficients.shape != (len(CHANNELS),):
        raise DomainError(f"expected {len(CHANNELS)} coefficients, got shape {coefficients.shape}")
    return np.einsum("c,cij->ij", coefficients, channel_basis())


def channel_scales(config: NoiseConfig) -> np.ndarray:
    return np.where(LOGICAL_CHANNELS, config.sigma_logical, config.sigma_leakage)


def sample_ensemble(config: NoiseConfig, n_steps: int) -> NoiseEnsemble:
    """Draw and freeze `config.m_realizations` realizations from `config.seed`"""
    if n_steps < 1:
        raise DomainError(f"n_steps must be >= 1, got {n_steps}")
    rng = np.random.default_rng(config.seed)
    m = config.m_realizations

    nonlocal_coefficients = rng.normal(size=(m, len(CHANNELS))) * channel_scales(config)

    local_logical = local_leakage = None
    if config.local_enabled:
        if config.shared_local_coefficient:
            local_logical = np.repeat(rng.normal(size=(m, n_steps, 1)), 6, axis=2)
        else:
            local_logical = rng.normal(size=(m, n_steps, 6))
        local_logical = local_logical * config.sigma_local
        if config.virtual_z:
            local_logical[:, :, list(GAMMA_INDICES)] = 0.0
        local_leakage = rng.normal(size=(m, n_steps, 2, 5)) * config.sigma_local

    realizations = tuple(
        NoiseRealization(
            n_steps=n_steps,
            nonlocal_coefficients=nonlocal_coefficients[k],
            local_logical=None if local_logical is None else local_logical[k],
            local_leakage=None if local_leakage is None else local_leakage[k],
        )
        for k in range(m)
    )
    logger.debug("sampled %d realizations for N=%d (seed=%d)", m, n_steps, config.seed)
    return NoiseEnsemble(config=config, n_steps=n_steps, realizations=realizations)


def zero_ensemble(n_steps: int, m_realizations: int = 1, local_enabled: bool = False) -> NoiseEnsemble:
    """Ensemble of identically zero realizations"""
    config = NoiseConfig(
        sigma_logical=0.0, sigma_leakage=0.0, sigma_local=0.0, local_enabled=local_enabled, m_realizations=m_realizations
    )
    return sample_ensemble(config, n_steps)


def local_rotation_fidelity(
    sigma_local: float,
    n_coeff_sets: int = 1000,
    n_angle_sets: int = 1000,
    seed: int = 0,
    gamma_in_magnitude: bool = True,
) -> float:
    """Average |tr(R'^dagger R)|^2/81 of noisy against ideal local rotations.

    Angles are uniform in [-2pi, 2pi]; every angle set is paired with every
    coefficient set.
    """
    if n_coeff_sets < 1 or n_angle_sets < 1:
        raise DomainError("sample counts must be >= 1")
    if sigma_local < 0:
        raise DomainError(f"sigma_local must be non-negative, got {sigma_local}")
    if sigma_local == 0:
        return 1.0
    rng = np.random.default_rng(seed)
    angle_sets = rng.uniform(-2 * np.pi, 2 * np.pi, size=(n_angle_sets, 6))
    logical = rng.normal(size=(n_coeff_sets, 6)) * sigma_local
    leakage = rng.normal(size=(n_coeff_sets, 2, 5)) * sigma_local

    total = 0.0
    for angles in angle_sets:
        ideal = (su2_block_exp(*angles[0:3]), su2_block_exp(*angles[3:6]))
        perturbed = angles * (1.0 + logical)
        m1, m2 = rotation_magnitudes(angles, include_gamma=gamma_in_magnitude)
        noisy = (
            leakage_factor(np.full(n_coeff_sets, m1), leakage[:, 0, :])
            @ su2_block_exp(perturbed[:, 0], perturbed[:, 1], perturbed[:, 2]),
            leakage_factor(np.full(n_coeff_sets, m2), leakage[:, 1, :])
            @ su2_block_exp(perturbed[:, 3], perturbed[:, 4], perturbed[:, 5]),
        )
        # tr((A'(x)B')^dagger (A(x)B)) = tr(A'^dagger A) * tr(B'^dagger B)
        overlap = np.ones(n_coeff_sets, dtype=complex)
        for noisy_factor, ideal_factor in zip(noisy, ideal):
            overlap *= np.einsum("kij,ij->k", noisy_factor.conj(), ideal_factor)
        total += float(np.sum(np.abs(overlap) ** 2)) / 81.0

    return min(1.0, total / (n_coeff_sets * n_angle_sets))
