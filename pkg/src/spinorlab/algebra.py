"""Pauli-vector algebra on 2x2 complex matrices and 3-vector rotations.

Values are plain numpy arrays: a two-spinor is shape ``(2,)`` complex, a
matrix is ``(2, 2)`` complex and a real vector is ``(3,)`` float.
"""

from __future__ import annotations

import numpy as np

from .errors import PreconditionError

SIGMA_X = np.array([[0, 1], [1, 0]], dtype=complex)
SIGMA_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
SIGMA_Z = np.array([[1, 0], [0, -1]], dtype=complex)
IDENTITY = np.eye(2, dtype=complex)

# stacked (3, 2, 2) so that einsum contractions read naturally
PAULI = np.stack([SIGMA_X, SIGMA_Y, SIGMA_Z])

UNIT_TOL = 1e-12


def vec3(v) -> np.ndarray:
    out = np.asarray(v, dtype=float).reshape(3)
    if not np.all(np.isfinite(out)):
        raise PreconditionError(f"non-finite vector {out!r}")
    return out


def spinor(a, b) -> np.ndarray:
    return np.array([a, b], dtype=complex)


def pauli_dot(v) -> np.ndarray:
    """Return ``v_x sx + v_y sy + v_z sz`` as a Hermitian, traceless 2x2 matrix."""
    x, y, z = vec3(v)
    return np.array([[z, x - 1j * y], [x + 1j * y, -z]], dtype=complex)


def commutator(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    return a @ b - b @ a


def expectation_sigma(psi: np.ndarray) -> np.ndarray:
    """Real 3-vector ``psi^dagger sigma psi`` for a single two-spinor."""
    psi = np.asarray(psi, dtype=complex)
    return np.real(np.einsum("a,iab,b->i", psi.conj(), PAULI, psi))


def rotate_vector(axis, angle: float, v) -> np.ndarray:
    """Rotate ``v`` about the unit vector ``axis`` by ``angle`` (right-handed).

    Uses the Rodrigues form ``v cos + (n x v) sin + n (n.v)(1 - cos)``.
    Raises PreconditionError when ``axis`` is not unit length within 1e-12.
    """
    n = vec3(axis)
    v = vec3(v)
    if abs(np.linalg.norm(n) - 1.0) > UNIT_TOL:
        raise PreconditionError(f"rotation axis must be unit length, |axis| = {np.linalg.norm(n)!r}")
    c, s = np.cos(angle), np.sin(angle)
    return v * c + np.cross(n, v) * s + n * (n @ v) * (1.0 - c)


def unit(v) -> np.ndarray:
    v = vec3(v)
    norm = np.linalg.norm(v)
    if norm == 0.0:
        raise PreconditionError("cannot normalise the zero vector")
    return v / norm
