"""
Gell-Mann basis, tensor products and exponentials of Hermitian generators.

All matrices are dense complex numpy arrays. The two-qutrit ordering is
row-major: the first qutrit is the major (left) tensor slot.
"""

from functools import lru_cache
from typing import Tuple

import numpy as np

from .exceptions import DomainError, NumericError

HERMITIAN_TOL = 1e-12

_SQRT3 = np.sqrt(3.0)

_GELL_MANN = (
    np.eye(3, dtype=complex),
    np.array([[0, 1, 0], [1, 0, 0], [0, 0, 0]], dtype=complex),
    np.array([[0, -1j, 0], [1j, 0, 0], [0, 0, 0]], dtype=complex),
    np.array([[1, 0, 0], [0, -1, 0], [0, 0, 0]], dtype=complex),
    np.array([[0, 0, 1], [0, 0, 0], [1, 0, 0]], dtype=complex),
    np.array([[0, 0, -1j], [0, 0, 0], [1j, 0, 0]], dtype=complex),
    np.array([[0, 0, 0], [0, 0, 1], [0, 1, 0]], dtype=complex),
    np.array([[0, 0, 0], [0, 0, -1j], [0, 1j, 0]], dtype=complex),
    np.array([[1, 0, 0], [0, 1, 0], [0, 0, -2]], dtype=complex) / _SQRT3,
)
for _matrix in _GELL_MANN:
    _matrix.flags.writeable = False


def gell_mann(i: int) -> np.ndarray:
    """Return the Gell-Mann matrix lambda_i (lambda_0 is the 3x3 identity).

    The returned array is shared and read-only.
    """
    if isinstance(i, bool) or not isinstance(i, (int, np.integer)) or not 0 <= i <= 8:
        raise DomainError(f"Gell-Mann index must be an integer in [0, 8], got {i!r}")
    return _GELL_MANN[int(i)]


def kron(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Two-qutrit tensor product a (x) b, first factor major"""
    a = np.asarray(a)
    b = np.asarray(b)
    if a.shape != (3, 3) or b.shape != (3, 3):
        raise DomainError(f"kron expects two 3x3 operators, got {a.shape} and {b.shape}")
    return np.kron(a, b)


def kron_stack(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Batched kron over leading axes: (..., 3, 3) x (..., 3, 3) -> (..., 9, 9)"""
    out = np.einsum("...ij,...kl->...ikjl", a, b)
    return out.reshape(out.shape[:-4] + (9, 9))


def _check_hermitian(h: np.ndarray) -> np.ndarray:
    h = np.asarray(h, dtype=complex)
    if h.ndim != 2 or h.shape[0] != h.shape[1]:
        raise DomainError(f"expected a square operator, got shape {h.shape}")
    if not np.all(np.isfinite(h)):
        raise DomainError("operator has non-finite entries")
    if np.max(np.abs(h - h.conj().T), initial=0.0) > HERMITIAN_TOL:
        raise DomainError("generator is not Hermitian")
    return h


def hermitian_eig(h: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """Validated eigendecomposition h = V diag(w) V^dagger"""
    h = _check_hermitian(h)
    try:
        return np.linalg.eigh(h)
    except np.linalg.LinAlgError as e:
        raise NumericError(f"eigendecomposition failed: {e}") from e


def expi_from_eig(w: np.ndarray, v: np.ndarray, scales) -> np.ndarray:
    """exp(i*s*h) for every s in `scales` given the eigenpairs of h.

    Output shape is np.shape(scales) + h.shape.
    """
    scales = np.asarray(scales, dtype=float)
    phases = np.exp(1j * scales[..., None] * w)
    return np.einsum("ij,...j,kj->...ik", v, phases, v.conj())


def expi_hermitian(h: np.ndarray, scale: float) -> np.ndarray:
    """exp(i*scale*h) for Hermitian h via its eigendecomposition"""
    w, v = hermitian_eig(h)
    return expi_from_eig(w, v, scale)


def expi_hermitian_batch(h: np.ndarray, scales) -> np.ndarray:
    """exp(i*s*h) for many scales, sharing one eigendecomposition of h"""
    w, v = hermitian_eig(h)
    return expi_from_eig(w, v, scales)


@lru_cache(maxsize=None)
def gell_mann_eig(i: int) -> Tuple[np.ndarray, np.ndarray]:
    """Cached eigenpairs of lambda_i"""
    w, v = hermitian_eig(gell_mann(i))
    w.flags.writeable = False
    v.flags.writeable = False
    return w, v


def su2_block_exp(a, b, c) -> np.ndarray:
    """exp[i(a*lambda_1 + b*lambda_2 + c*lambda_3)] in closed form.

    Accepts scalars or broadcastable arrays; returns (..., 3, 3).
    The leakage level is left untouched.
    """
    a, b, c = np.broadcast_arrays(
        np.asarray(a, dtype=float), np.asarray(b, dtype=float), np.asarray(c, dtype=float)
    )
    theta = np.sqrt(a * a + b * b + c * c)
    cos = np.cos(theta)
    # sin(theta)/theta, equal to 1 at theta = 0
    sinc = np.sinc(theta / np.pi)

    out = np.zeros(a.shape + (3, 3), dtype=complex)
    out[..., 0, 0] = cos + 1j * c * sinc
    out[..., 0, 1] = (b + 1j * a) * sinc
    out[..., 1, 0] = (-b + 1j * a) * sinc
    out[..., 1, 1] = cos - 1j * c * sinc
    out[..., 2, 2] = 1.0
    return out


def is_unitary(u: np.ndarray, tol: float = 1e-12) -> bool:
    u = np.asarray(u)
    eye = np.eye(u.shape[-1])
    return bool(np.max(np.abs(np.swapaxes(u.conj(), -1, -2) @ u - eye)) <= tol)
