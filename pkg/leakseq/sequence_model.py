"""
Composite entangling sequence: interleaved single-qutrit rotations between
N slices of a (noisy) conditional-phase style interaction.

Step n = 1 acts first, i.e. it is the rightmost factor of every product.
"""

from dataclasses import dataclass
from enum import Enum
from functools import lru_cache
from typing import TYPE_CHECKING, Iterable, Optional, Sequence, Tuple

import numpy as np

from .exceptions import DomainError
from .su_algebra import expi_from_eig, expi_hermitian, gell_mann, gell_mann_eig, kron, kron_stack, su2_block_exp

if TYPE_CHECKING:
    from .noise import LocalNoiseDraw, NoiseEnsemble, NoiseRealization

ANGLE_NAMES = ("alpha1", "beta1", "gamma1", "alpha2", "beta2", "gamma2")
GAMMA_INDICES = (2, 5)
LEAKAGE_GENERATORS = (4, 5, 6, 7, 8)


class InteractionKind(str, Enum):
    ZZ = "zz"
    XX_PLUS_YY = "xxyy"


@lru_cache(maxsize=None)
def interaction_generator(kind: InteractionKind) -> np.ndarray:
    kind = InteractionKind(kind)
    if kind is InteractionKind.ZZ:
        g = kron(gell_mann(3), gell_mann(3))
    else:
        g = kron(gell_mann(1), gell_mann(1)) + kron(gell_mann(2), gell_mann(2))
    g.flags.writeable = False
    return g


@dataclass(frozen=True)
class RotationParams:
    """Pauli-vector angles of one interleaved local rotation (radians)"""

    alpha1: float = 0.0
    beta1: float = 0.0
    gamma1: float = 0.0
    alpha2: float = 0.0
    beta2: float = 0.0
    gamma2: float = 0.0

    def __post_init__(self):
        for name in ANGLE_NAMES:
            value = float(getattr(self, name))
            if not np.isfinite(value):
                raise DomainError(f"rotation angle {name} must be finite, got {value}")
            object.__setattr__(self, name, value)

    @classmethod
    def from_array(cls, values: Sequence[float]) -> "RotationParams":
        if len(values) != 6:
            raise DomainError(f"a rotation needs 6 angles, got {len(values)}")
        return cls(*(float(v) for v in values))

    def as_array(self) -> np.ndarray:
        return np.array([getattr(self, name) for name in ANGLE_NAMES])

    def magnitudes(self, include_gamma: bool = True) -> Tuple[float, float]:
        return tuple(float(m) for m in rotation_magnitudes(self.as_array(), include_gamma))


@dataclass(frozen=True)
class SequenceParams:
    """The optimization variable: interaction kind plus one rotation per step"""

    interaction: InteractionKind
    steps: Tuple[RotationParams, ...]

    def __post_init__(self):
        object.__setattr__(self, "interaction", InteractionKind(self.interaction))
        object.__setattr__(self, "steps", tuple(self.steps))
        if len(self.steps) < 1:
            raise DomainError("a sequence needs at least one step")

    @property
    def n_steps(self) -> int:
        return len(self.steps)

    @classmethod
    def zeros(cls, interaction: InteractionKind, n_steps: int) -> "SequenceParams":
        if n_steps < 1:
            raise DomainError(f"n_steps must be >= 1, got {n_steps}")
        return cls(interaction, tuple(RotationParams() for _ in range(n_steps)))

    @classmethod
    def from_vector(cls, interaction: InteractionKind, x: Iterable[float]) -> "SequenceParams":
        x = np.asarray(list(x) if not isinstance(x, np.ndarray) else x, dtype=float)
        if x.ndim != 1 or x.size == 0 or x.size % 6:
            raise DomainError(f"parameter vector length must be a positive multiple of 6, got {x.size}")
        return cls(interaction, tuple(RotationParams.from_array(row) for row in x.reshape(-1, 6)))

    def to_vector(self) -> np.ndarray:
        return self.angles().ravel()

    def angles(self) -> np.ndarray:
        """(n_steps, 6) angle table"""
        return np.array([step.as_array() for step in self.steps])

    def tiled(self, times: int) -> "SequenceParams":
        return SequenceParams(self.interaction, self.steps * times)


def rotation_magnitudes(angles: np.ndarray, include_gamma: bool = True) -> Tuple[np.ndarray, np.ndarray]:
    """Rotation-vector lengths of both qutrits for (..., 6) angle arrays"""
    angles = np.asarray(angles, dtype=float)
    first, second = angles[..., 0:3], angles[..., 3:6]
    if not include_gamma:
        first, second = first[..., :2], second[..., :2]
    return np.linalg.norm(first, axis=-1), np.linalg.norm(second, axis=-1)


def leakage_factor(magnitudes: np.ndarray, coefficients: np.ndarray) -> np.ndarray:
    """prod_k exp(i*m*delta_k*lambda_k) for k = 4..8, lambda_4 applied first.

    lambda_4 is the rightmost factor. Reading the product like the step
    product instead would put lambda_4 leftmost; the two orders differ only
    at second order in the coefficients.

    magnitudes has shape S, coefficients S + (5,); returns S + (3, 3).
    """
    magnitudes = np.asarray(magnitudes, dtype=float)
    coefficients = np.asarray(coefficients, dtype=float)
    out = np.broadcast_to(np.eye(3, dtype=complex), magnitudes.shape + (3, 3))
    for slot, k in enumerate(LEAKAGE_GENERATORS):
        w, v = gell_mann_eig(k)
        out = expi_from_eig(w, v, magnitudes * coefficients[..., slot]) @ out
    return out


def noisy_rotation_stack(
    angles: np.ndarray,
    logical: Optional[np.ndarray] = None,
    leakage: Optional[np.ndarray] = None,
    gamma_in_magnitude: bool = True,
) -> np.ndarray:
    """Local rotations for (..., 6) angles with optional control noise.

    `logical` (..., 6) rescales each angle by (1 + delta); `leakage`
    (..., 2, 5) left-multiplies each qutrit factor by its leakage factor,
    with magnitudes taken from the unperturbed angles.
    """
    angles = np.asarray(angles, dtype=float)
    perturbed = angles if logical is None else angles * (1.0 + np.asarray(logical, dtype=float))
    first = su2_block_exp(perturbed[..., 0], perturbed[..., 1], perturbed[..., 2])
    second = su2_block_exp(perturbed[..., 3], perturbed[..., 4], perturbed[..., 5])
    if leakage is not None:
        leakage = np.asarray(leakage, dtype=float)
        m1, m2 = rotation_magnitudes(angles, include_gamma=gamma_in_magnitude)
        first = leakage_factor(np.broadcast_to(m1, leakage.shape[:-2]), leakage[..., 0, :]) @ first
        second = leakage_factor(np.broadcast_to(m2, leakage.shape[:-2]), leakage[..., 1, :]) @ second
    return kron_stack(first, second)


def rotation_operator(p: RotationParams) -> np.ndarray:
    """R = exp[i(a1 l1 + b1 l2 + g1 l3)] (x) exp[i(a2 l1 + b2 l2 + g2 l3)]"""
    return kron(su2_block_exp(p.alpha1, p.beta1, p.gamma1), su2_block_exp(p.alpha2, p.beta2, p.gamma2))


def apply_local_noise(p: RotationParams, local: "LocalNoiseDraw", gamma_in_magnitude: bool = True) -> np.ndarray:
    """Rotation with multiplicative angle noise and the leakage factor on the left"""
    return noisy_rotation_stack(p.as_array(), local.logical, local.leakage, gamma_in_magnitude)


@lru_cache(maxsize=None)
def drift_step(n_steps: int, kind: InteractionKind = InteractionKind.ZZ) -> np.ndarray:
    """exp(-i*pi*G/N): the N-th root of a 2*pi conditional phase"""
    if n_steps < 1:
        raise DomainError(f"n_steps must be >= 1, got {n_steps}")
    u = expi_hermitian(interaction_generator(InteractionKind(kind)), -np.pi / n_steps)
    u.flags.writeable = False
    return u


def target_operator(seq: SequenceParams) -> np.ndarray:
    """Noise-free sequence O"""
    drift = drift_step(seq.n_steps, seq.interaction)
    u = np.eye(9, dtype=complex)
    for step in seq.steps:
        u = drift @ (rotation_operator(step) @ u)
    return u


def evolution_operator(seq: SequenceParams, noise: "NoiseRealization", gamma_in_magnitude: bool = True) -> np.ndarray:
    """Noisy sequence U for a single frozen realization"""
    if noise.n_steps != seq.n_steps:
        raise DomainError(f"noise realization is for N={noise.n_steps}, sequence has N={seq.n_steps}")
    step_factor = drift_step(seq.n_steps, seq.interaction) @ noise.nonlocal_factor
    u = np.eye(9, dtype=complex)
    for n, step in enumerate(seq.steps):
        local = noise.local_draw(n)
        rotation = rotation_operator(step) if local is None else apply_local_noise(step, local, gamma_in_magnitude)
        u = step_factor @ (rotation @ u)
    return u


def evolution_operators(seq: SequenceParams, ensemble: "NoiseEnsemble") -> np.ndarray:
    """U for every realization of a frozen ensemble, shape (M, 9, 9)"""
    if ensemble.n_steps != seq.n_steps:
        raise DomainError(f"ensemble is for N={ensemble.n_steps}, sequence has N={seq.n_steps}")
    factors = ensemble.step_factors(seq.interaction)
    angles = seq.angles()
    if ensemble.local_logical is None and ensemble.local_leakage is None:
        rotations = noisy_rotation_stack(angles)
        per_realization = False
    else:
        rotations = noisy_rotation_stack(
            angles[None, :, :],
            ensemble.local_logical,
            ensemble.local_leakage,
            ensemble.config.gamma_in_magnitude,
        )
        per_realization = True

    u = np.broadcast_to(np.eye(9, dtype=complex), factors.shape)
    for n in range(seq.n_steps):
        rotation = rotations[:, n] if per_realization else rotations[n]
        u = factors @ (rotation @ u)
    return u
