"""Plane-wave eigenstates of H = c sigma.p.

The positive branch has its spin along k, the negative branch against it.
Time evolution follows psi(t) = exp(-i H t / hbar) psi(0), so the phase
factor is exp(-i s c |k| t) with s = +1 or -1.

Eigenvalues are reported as +/- c hbar |k|. Quoting them as +/- hbar |k|
would drop the factor c that H carries, so c is kept everywhere.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .algebra import PAULI, pauli_dot, vec3
from .errors import PreconditionError

PLUS = "plus"
MINUS = "minus"
BRANCHES = (PLUS, MINUS)


def branch_sign(branch: str) -> int:
    if branch == PLUS:
        return 1
    if branch == MINUS:
        return -1
    raise PreconditionError(f"branch must be 'plus' or 'minus', got {branch!r}")


def helicity_spinor(k, branch: str) -> np.ndarray:
    """Unit spinor with sigma.k_hat eigenvalue +1 (plus) or -1 (minus).

    Written in the z-diagonal basis; for k along +z this is (1, 0) or (0, 1).
    A zero wavevector uses z as the quantisation axis.
    """
    k = vec3(k)
    norm = np.linalg.norm(k)
    if norm == 0.0:
        c, s, phi = 1.0, 0.0, 0.0
    else:
        # half-angle cosines without the cancellation of arccos near the poles
        perp = np.hypot(k[0], k[1])
        phi = np.arctan2(k[1], k[0])
        if k[2] >= 0:
            c = np.sqrt((norm + k[2]) / (2 * norm))
            s = perp / (2 * norm * c)
        else:
            s = np.sqrt((norm - k[2]) / (2 * norm))
            c = perp / (2 * norm * s)
    if branch_sign(branch) > 0:
        return np.array([c, np.exp(1j * phi) * s], dtype=complex)
    return np.array([-np.exp(-1j * phi) * s, c], dtype=complex)


@dataclass(frozen=True)
class PlaneWaveSpinor:
    k: np.ndarray
    branch: str = PLUS
    amplitude: complex = 1.0

    def __post_init__(self):
        object.__setattr__(self, "k", vec3(self.k))
        branch_sign(self.branch)

    @property
    def sign(self) -> int:
        return branch_sign(self.branch)

    @property
    def chi(self) -> np.ndarray:
        return helicity_spinor(self.k, self.branch)

    def eigenvalue(self, c: float = 1.0, hbar: float = 1.0) -> float:
        return self.sign * c * hbar * float(np.linalg.norm(self.k))


def evaluate(state: PlaneWaveSpinor, r, t: float = 0.0, c: float = 1.0) -> np.ndarray:
    r = vec3(r)
    phase = np.exp(1j * (state.k @ r)) * np.exp(-1j * state.sign * c * np.linalg.norm(state.k) * t)
    return state.amplitude * phase * state.chi


def apply_hamiltonian(state: PlaneWaveSpinor, r, c: float = 1.0, hbar: float = 1.0, t: float = 0.0):
    """Return ``(H psi(r), eigenvalue)`` with the gradient taken in closed form.

    For a plane wave ``-i hbar grad`` acting on ``exp(i k.r)`` gives
    ``hbar k``, so ``H psi = c hbar (sigma.k) psi``.
    """
    psi = evaluate(state, r, t, c)
    h_psi = c * hbar * (pauli_dot(state.k) @ psi)
    return h_psi, state.eigenvalue(c, hbar)


def analytic_residual(state: PlaneWaveSpinor, r, c: float = 1.0, hbar: float = 1.0) -> float:
    h_psi, lam = apply_hamiltonian(state, r, c, hbar)
    lam_psi = lam * evaluate(state, r, 0.0, c)
    scale = np.linalg.norm(lam_psi)
    diff = np.linalg.norm(h_psi - lam_psi)
    return float(diff / scale) if scale > 0 else float(diff)


def _fd_hamiltonian(state: PlaneWaveSpinor, r: np.ndarray, h: float, c: float, hbar: float) -> np.ndarray:
    out = np.zeros(2, dtype=complex)
    for axis in range(3):
        step = np.zeros(3)
        step[axis] = h
        deriv = (evaluate(state, r + step, 0.0, c) - evaluate(state, r - step, 0.0, c)) / (2 * h)
        out += PAULI[axis] @ deriv
    return -1j * hbar * c * out


def eigen_residual(
    state: PlaneWaveSpinor, samples, h: float = 1e-3, c: float = 1.0, hbar: float = 1.0
) -> float:
    """Max relative residual ``|H_fd psi - lambda psi| / |lambda psi|`` over ``samples``.

    ``H_fd`` replaces the gradient by second-order central differences of
    spacing ``h``, so the residual shrinks as ``h**2``. At ``|k| = 0`` the
    field is constant and the absolute residual (zero) is returned.
    """
    samples = [vec3(s) for s in samples]
    if not samples:
        raise PreconditionError("eigen_residual needs at least one sample point")
    if h <= 0:
        raise PreconditionError("finite-difference spacing h must be > 0")
    lam = state.eigenvalue(c, hbar)
    worst = 0.0
    for r in samples:
        lam_psi = lam * evaluate(state, r, 0.0, c)
        diff = np.linalg.norm(_fd_hamiltonian(state, r, h, c, hbar) - lam_psi)
        scale = np.linalg.norm(lam_psi)
        worst = max(worst, diff / scale if scale > 0 else diff)
    return float(worst)


def convergence_order(state: PlaneWaveSpinor, samples, h: float, c: float = 1.0, hbar: float = 1.0) -> float:
    """Observed order log2(res(h) / res(h/2)) of the finite-difference residual."""
    coarse = eigen_residual(state, samples, h, c, hbar)
    fine = eigen_residual(state, samples, h / 2, c, hbar)
    return float(np.log2(coarse / fine))
