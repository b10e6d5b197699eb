"""
Gate-quality measures: trace fidelity against the noise-free target, Makhlin
invariants, the perfect-entangler distance and Weyl-chamber coordinates of the
projected logical block.

Functions with a plural name work on stacks of shape (M, d, d) and are what
the optimizer uses; the singular forms are thin wrappers for single operators.
"""

import logging
from dataclasses import dataclass
from typing import Sequence, Tuple

import numpy as np
import scipy.linalg

from .exceptions import DegenerateInvariantsError, DomainError, SingularProjectionError
from .su_algebra import expi_hermitian

logger = logging.getLogger(__name__)

LOGICAL_INDICES = (0, 1, 3, 4)
SINGULAR_TOL = 1e-12
ROOT_IMAG_DIAGNOSTIC = 1e-6
ROOT_IMAG_LIMIT = 1e-3
CHAMBER_TOL = 1e-12

# Bell ("magic") basis: single-qubit SU(2) x SU(2) is real orthogonal in it
MAGIC = (1.0 / np.sqrt(2)) * np.array(
    [[1, 0, 0, 1j], [0, 1j, 1, 0], [0, 1j, -1, 0], [1, 0, 0, -1j]], dtype=complex
)

_PAULI_X = np.array([[0, 1], [1, 0]], dtype=complex)
_PAULI_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
_PAULI_Z = np.array([[1, 0], [0, -1]], dtype=complex)
XX = np.kron(_PAULI_X, _PAULI_X)
YY = np.kron(_PAULI_Y, _PAULI_Y)
ZZ = np.kron(_PAULI_Z, _PAULI_Z)


@dataclass(frozen=True)
class MakhlinInvariants:
    g1: float
    g2: float
    g3: float
    residual_imag: float = 0.0


@dataclass(frozen=True)
class PEAssessment:
    d: float
    s: float
    D: float
    roots: Tuple[float, float, float]
    root_imag: float = 0.0


@dataclass(frozen=True)
class WeylCoordinates:
    c1: float
    c2: float
    c3: float

    def as_tuple(self) -> Tuple[float, float, float]:
        return (self.c1, self.c2, self.c3)


def project_logical(u: np.ndarray) -> np.ndarray:
    """Logical 4x4 block (both qutrits in {0, 1}) of a 9x9 operator or stack"""
    u = np.asarray(u)
    if u.shape[-2:] != (9, 9):
        raise DomainError(f"expected 9x9 operator(s), got shape {u.shape}")
    idx = list(LOGICAL_INDICES)
    return u[..., idx, :][..., :, idx]


def unitarize(u4: np.ndarray) -> np.ndarray:
    """Closest unitary (polar factor) of a projected block"""
    unitary, _ = scipy.linalg.polar(np.asarray(u4, dtype=complex))
    return unitary


def _as_stack(u4: np.ndarray) -> np.ndarray:
    u4 = np.asarray(u4, dtype=complex)
    if u4.shape[-2:] != (4, 4):
        raise DomainError(f"expected 4x4 operator(s), got shape {u4.shape}")
    return u4.reshape((-1, 4, 4))


def _checked_det(stack: np.ndarray) -> np.ndarray:
    det = np.linalg.det(stack)
    singular = np.flatnonzero(np.abs(det) < SINGULAR_TOL)
    if singular.size:
        index = int(singular[0])
        raise SingularProjectionError(
            f"realization {index}: projected logical block is singular (|det| = {abs(det[index]):.3e})", index=index
        )
    return det


def makhlin_arrays(u4: np.ndarray) -> Tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """(g1, g2, g3, residual_imag) for a stack of 4x4 blocks"""
    stack = _as_stack(u4)
    det = _checked_det(stack)
    u_magic = MAGIC.conj().T @ stack @ MAGIC
    m = np.swapaxes(u_magic, -1, -2) @ u_magic
    tr_m = np.trace(m, axis1=-2, axis2=-1)
    tr_m2 = np.trace(m @ m, axis1=-2, axis2=-1)
    g12 = tr_m ** 2 / (16.0 * det)
    g3 = (tr_m ** 2 - tr_m2) / (4.0 * det)
    return g12.real, g12.imag, g3.real, np.abs(g3.imag)


def makhlin_invariants(u4: np.ndarray) -> MakhlinInvariants:
    g1, g2, g3, residual = makhlin_arrays(u4)
    return MakhlinInvariants(float(g1[0]), float(g2[0]), float(g3[0]), float(residual[0]))


def pe_arrays(g1, g2, g3, strict: bool = True):
    """Vectorised perfect-entangler distance.

    Roots of z^3 - g3 z^2 + (4|g12| - 1) z + (g3 - 4 g1) come from batched
    companion-matrix eigenvalues. Returns (d, s, D, roots, root_imag) with
    roots sorted descending and clamped to [-1, 1].
    """
    g1, g2, g3 = (np.atleast_1d(np.asarray(g, dtype=float)) for g in (g1, g2, g3))
    modulus = np.hypot(g1, g2)

    companion = np.zeros(g1.shape + (3, 3))
    companion[..., 0, 0] = g3
    companion[..., 0, 1] = -(4.0 * modulus - 1.0)
    companion[..., 0, 2] = -(g3 - 4.0 * g1)
    companion[..., 1, 0] = 1.0
    companion[..., 2, 1] = 1.0
    raw_roots = np.linalg.eigvals(companion)

    root_imag = np.max(np.abs(raw_roots.imag), axis=-1)
    worst = int(np.argmax(root_imag))
    if strict and root_imag[worst] > ROOT_IMAG_LIMIT:
        raise DegenerateInvariantsError(
            f"perfect-entangler cubic has complex roots (|imag| = {root_imag[worst]:.3e})"
        )
    if root_imag[worst] > ROOT_IMAG_DIAGNOSTIC:
        logger.warning("discarding imaginary root parts up to %.3e", root_imag[worst])

    roots = -np.sort(-np.clip(raw_roots.real, -1.0, 1.0), axis=-1)
    d = g3 * modulus - g1
    s = np.pi - np.arccos(roots[..., 0]) - np.arccos(roots[..., 2])
    D = np.where((d > 0) & (s > 0), d, np.where((d < 0) & (s < 0), -d, 0.0))
    return d, s, D, roots, root_imag


def pe_assessment(g: MakhlinInvariants, strict: bool = True) -> PEAssessment:
    d, s, D, roots, root_imag = pe_arrays(g.g1, g.g2, g.g3, strict=strict)
    return PEAssessment(
        d=float(d[0]),
        s=float(s[0]),
        D=float(D[0]),
        roots=tuple(float(z) for z in roots[0]),
        root_imag=float(root_imag[0]),
    )


def _fold_into_chamber(c: np.ndarray) -> np.ndarray:
    """Map raw (..., 3) coordinates into c1 >= c2 >= c3 >= 0, c1 <= pi - c2.

    Uses the local-equivalence symmetries: shifts of any coordinate by pi,
    sign flips of pairs and permutations.
    """
    c = np.mod(c, np.pi)
    c = np.where(c > np.pi / 2 + CHAMBER_TOL, c - np.pi, c)
    c = np.where(np.abs(c) < CHAMBER_TOL, 0.0, c)
    c = np.where(np.abs(c - np.pi / 2) < CHAMBER_TOL, np.pi / 2, c)

    magnitude = np.abs(c)
    order = np.argsort(-magnitude, axis=-1, kind="stable")
    magnitude = np.take_along_axis(magnitude, order, axis=-1)
    odd = (np.sum(c < 0, axis=-1) % 2 == 1) & (magnitude[..., 2] > 0)

    folded = magnitude.copy()
    folded[..., 0] = np.where(odd, np.pi - magnitude[..., 0], magnitude[..., 0])
    return folded


def weyl_arrays(u4: np.ndarray) -> np.ndarray:
    """(M, 3) Weyl coordinates (radians) for a stack of 4x4 blocks"""
    stack = _as_stack(u4)
    det = _checked_det(stack)
    normalized = stack / (det ** 0.25)[:, None, None]
    u_magic = MAGIC.conj().T @ normalized @ MAGIC
    m = np.swapaxes(u_magic, -1, -2) @ u_magic
    # eigenphases of m are 2*theta_k; pairs of them give the coordinates
    phases = np.angle(np.linalg.eigvals(m))
    raw = np.stack(
        [
            (phases[:, 0] + phases[:, 2]) / 2,
            (phases[:, 1] + phases[:, 2]) / 2,
            (phases[:, 0] + phases[:, 1]) / 2,
        ],
        axis=-1,
    )
    return _fold_into_chamber(raw)


def weyl_coordinates(u4: np.ndarray) -> WeylCoordinates:
    c1, c2, c3 = weyl_arrays(u4)[0]
    return WeylCoordinates(float(c1), float(c2), float(c3))


def canonical_gate(c: WeylCoordinates) -> np.ndarray:
    """exp[i/2 (c1 XX + c2 YY + c3 ZZ)]"""
    return expi_hermitian(c.c1 * XX + c.c2 * YY + c.c3 * ZZ, 0.5)


def pe_fidelity_arrays(coords: np.ndarray) -> np.ndarray:
    c1, c2, c3 = coords[..., 0], coords[..., 1], coords[..., 2]
    half_pi = np.pi / 2
    return np.select(
        [c1 + c2 <= half_pi, c2 + c3 >= half_pi, c1 - c2 >= half_pi],
        [
            np.cos((c1 + c2 - half_pi) / 4) ** 2,
            np.cos((c2 + c3 - half_pi) / 4) ** 2,
            np.cos((c1 - c2 - half_pi) / 4) ** 2,
        ],
        default=1.0,
    )


def pe_fidelity(c: WeylCoordinates) -> float:
    """Normalised fidelity to the nearest perfect entangler; first matching case wins"""
    return float(pe_fidelity_arrays(np.array([c.as_tuple()]))[0])


def gate_errors(us: np.ndarray, target: np.ndarray) -> np.ndarray:
    """1 - |tr(O^dagger U)|^2 / d^2 for a stack of U"""
    us = np.asarray(us)
    target = np.asarray(target)
    if us.shape[-2:] != target.shape or target.shape[0] != target.shape[1]:
        raise DomainError(f"shape mismatch: {us.shape} against target {target.shape}")
    dim = target.shape[0]
    overlap = np.einsum("ij,...ij->...", target.conj(), us)
    return np.clip(1.0 - np.abs(overlap) ** 2 / dim ** 2, 0.0, 1.0)


def gate_error(u: np.ndarray, target: np.ndarray) -> float:
    return float(gate_errors(u, target))


def pe_metric_ensemble(us: np.ndarray, strict: bool = False) -> np.ndarray:
    """Perfect-entangler distance D of every realization's logical block"""
    g1, g2, g3, _ = makhlin_arrays(project_logical(us))
    return pe_arrays(g1, g2, g3, strict=strict)[2]


def pe_error_ensemble(us: Sequence[np.ndarray], unitarize_blocks: bool = False) -> float:
    """Mean of 1 - F_PE over realizations, summed in index order"""
    us = np.asarray(us)
    if us.ndim == 2:
        us = us[None]
    if us.shape[0] == 0:
        raise DomainError("pe_error_ensemble needs at least one operator")
    blocks = project_logical(us)
    if unitarize_blocks:
        blocks = np.array([unitarize(b) for b in blocks])
    coords = weyl_arrays(blocks)
    errors = 1.0 - pe_fidelity_arrays(coords)
    return float(sum(errors.tolist()) / len(errors))
