"""Cylindrical half-integer Bessel modes of H^2 and their diagnostics.

Each mode has two components, ``(u, v) = N exp(i k z) (A(x) e^{i m_u phi},
B(x) e^{i m_v phi})`` with ``x = k_o r``:

    A(x) = sin x / sqrt(x)                      (order 1/2)
    B(x) = cos x / sqrt(x) - sin x / x**1.5     (order 3/2)

The plus branch uses (A, B) with azimuthal numbers (1/2, 3/2); the minus
branch uses (B, A) with (-3/2, -1/2). Both are eigenfunctions of the
Laplacian with eigenvalue -(k^2 + k_o^2).

Half-integer phases make the modes double valued under phi -> phi + 2 pi;
angles are taken on the covering interval [0, 4 pi).
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .errors import PreconditionError
from .planewave import BRANCHES, MINUS, PLUS

# below this x the closed forms lose digits to cancellation
_SERIES_CUTOFF = 1e-2

AZIMUTHAL = {
    PLUS: (Fraction(1, 2), Fraction(3, 2)),
    MINUS: (Fraction(-3, 2), Fraction(-1, 2)),
}
SPIN_Z = (Fraction(1, 2), Fraction(-1, 2))


def radial_half(x):
    """sin(x)/sqrt(x), zero at the axis."""
    x = np.asarray(x, dtype=float)
    out = np.zeros_like(x)
    small = x < _SERIES_CUTOFF
    xs = x[small]
    # sqrt(x) (1 - x^2/6 + x^4/120)
    out[small] = np.sqrt(xs) * (1 - xs**2 / 6 + xs**4 / 120)
    xl = x[~small]
    out[~small] = np.sin(xl) / np.sqrt(xl)
    return out


def radial_three_halves(x):
    """cos(x)/sqrt(x) - sin(x)/x^(3/2), zero at the axis."""
    x = np.asarray(x, dtype=float)
    out = np.zeros_like(x)
    small = x < _SERIES_CUTOFF
    xs = x[small]
    # x^(-3/2) (x cos x - sin x) = -x^(3/2)/3 + x^(7/2)/30 - x^(11/2)/840
    out[small] = xs**1.5 * (-1 / 3 + xs**2 / 30 - xs**4 / 840)
    xl = x[~small]
    out[~small] = np.cos(xl) / np.sqrt(xl) - np.sin(xl) / xl**1.5
    return out


@dataclass(frozen=True)
class PhotonMode:
    k: float = 0.0
    k_o: float = 1.0
    branch: str = PLUS
    N: complex = 1.0

    def __post_init__(self):
        if not self.k_o > 0:
            raise PreconditionError(f"k_o must be > 0, got {self.k_o!r}")
        if self.branch not in BRANCHES:
            raise PreconditionError(f"branch must be 'plus' or 'minus', got {self.branch!r}")

    @property
    def r_o(self) -> float:
        return 1.0 / self.k_o

    @property
    def azimuthal(self) -> tuple[Fraction, Fraction]:
        return AZIMUTHAL[self.branch]


def eval_components(mode: PhotonMode, z, r, phi) -> np.ndarray:
    """Return the two components, shape ``(2, *broadcast_shape)``.

    Works elementwise on arrays; ``r`` must be >= 0 and the axis value is 0.
    """
    z, r, phi = np.broadcast_arrays(*(np.asarray(a, dtype=float) for a in (z, r, phi)))
    if np.any(r < 0):
        raise PreconditionError("radius must be >= 0")
    phi = np.mod(phi, 4 * np.pi)
    x = mode.k_o * r
    a, b = radial_half(x), radial_three_halves(x)
    upper_radial, lower_radial = (a, b) if mode.branch == PLUS else (b, a)
    m_u, m_v = (float(m) for m in mode.azimuthal)
    axial = mode.N * np.exp(1j * mode.k * z)
    return np.stack(
        [axial * upper_radial * np.exp(1j * m_u * phi), axial * lower_radial * np.exp(1j * m_v * phi)]
    )


@dataclass(frozen=True)
class CylSampleGrid:
    """Sample points on a (z, r, phi) box that keeps clear of the axis."""

    z: tuple[float, float] = (0.0, 1.0)
    r: tuple[float, float] = (0.5, 5.0)
    phi: tuple[float, float] = (0.0, 4 * np.pi)
    n: tuple[int, int, int] = (5, 64, 8)

    def __post_init__(self):
        if not self.r[0] > 0:
            raise PreconditionError("grid must exclude the axis: need r_min > 0")
        for lo_hi in (self.z, self.r, self.phi):
            if not lo_hi[1] >= lo_hi[0]:
                raise PreconditionError(f"bad range {lo_hi!r}")
        if min(self.n) < 1:
            raise PreconditionError("need at least one point per axis")

    def points(self):
        axes = [np.linspace(lo, hi, n) for (lo, hi), n in zip((self.z, self.r, self.phi), self.n)]
        return np.meshgrid(*axes, indexing="ij")


def default_grid(mode: PhotonMode, r_max: float = 5.0) -> CylSampleGrid:
    """Guard band r_min = 0.1 / k_o."""
    return CylSampleGrid(r=(0.1 / mode.k_o, r_max))


def laplacian_fd(mode: PhotonMode, z, r, phi, h: float) -> np.ndarray:
    """Second-order central-difference Laplacian in cylindrical coordinates."""

    def f(dz=0.0, dr=0.0, dphi=0.0):
        return eval_components(mode, z + dz, r + dr, phi + dphi)

    centre = f()
    d_rr = (f(dr=h) - 2 * centre + f(dr=-h)) / h**2
    d_r = (f(dr=h) - f(dr=-h)) / (2 * h)
    d_pp = (f(dphi=h) - 2 * centre + f(dphi=-h)) / h**2
    d_zz = (f(dz=h) - 2 * centre + f(dz=-h)) / h**2
    return d_rr + d_r / r + d_pp / r**2 + d_zz


def laplacian_eigencheck(mode: PhotonMode, grid: CylSampleGrid, h: float) -> float:
    """Max residual of lap(psi) + (k^2 + k_o^2) psi, relative to max |(k^2 + k_o^2) psi|.

    The normalisation uses the grid-wide maximum so that nodes of the
    radial functions do not inflate the ratio.
    """
    if h <= 0:
        raise PreconditionError("h must be > 0")
    if grid.r[0] - h <= 0:
        raise PreconditionError("stencil reaches the axis: need r_min > h")
    z, r, phi = grid.points()
    psi = eval_components(mode, z, r, phi)
    lam = mode.k**2 + mode.k_o**2
    residual = np.abs(laplacian_fd(mode, z, r, phi, h) + lam * psi)
    return float(residual.max() / np.abs(lam * psi).max())


def convergence_order(mode: PhotonMode, grid: CylSampleGrid, h: float) -> float:
    return float(np.log2(laplacian_eigencheck(mode, grid, h) / laplacian_eigencheck(mode, grid, h / 2)))


def hsq_eigenvalue(mode: PhotonMode, c: float = 1.0, hbar: float = 1.0) -> float:
    """Eigenvalue hbar^2 c^2 (k^2 + k_o^2) of H^2."""
    return hbar**2 * c**2 * (mode.k**2 + mode.k_o**2)


def _measured_azimuthal(mode: PhotonMode, component: int) -> Fraction:
    # phase advance over a small angle at a point off any radial node
    r = 0.37 * mode.r_o
    step = 1e-3
    a = eval_components(mode, 0.0, r, 0.0)[component]
    b = eval_components(mode, 0.0, r, step)[component]
    m = np.angle(b / a) / step
    return Fraction(round(2 * m), 2)


def jz_analysis(mode: PhotonMode) -> dict:
    """Orbital, spin and total angular momentum per component, in units of hbar.

    Orbital numbers are read off the mode's azimuthal phase; both
    components must give the same total, which is returned as ``Jz``.
    """
    per_component = []
    for comp in (0, 1):
        lz = _measured_azimuthal(mode, comp)
        if lz != mode.azimuthal[comp]:
            raise AssertionError(f"phase winding {lz} disagrees with closed form {mode.azimuthal[comp]}")
        per_component.append({"Lz": lz, "Sz": SPIN_Z[comp], "Jz": lz + SPIN_Z[comp]})
    if per_component[0]["Jz"] != per_component[1]["Jz"]:
        raise AssertionError("components carry different total Jz; not a Jz eigenstate")
    return {"upper": per_component[0], "lower": per_component[1], "Jz": per_component[0]["Jz"]}


def density_profile(mode: PhotonMode, r_samples, z: float = 0.0, phi: float = 0.0) -> np.ndarray:
    """Rows of ``(r, |u|^2 + |v|^2)``; independent of z and phi."""
    r = np.asarray(r_samples, dtype=float)
    if np.any(r < 0):
        raise PreconditionError("radius samples must be >= 0")
    comps = eval_components(mode, z, r, phi)
    density = np.sum(np.abs(comps) ** 2, axis=0)
    return np.column_stack([r, density])


def first_density_maximum(mode: PhotonMode, n: int = 20001) -> float:
    """Radius of the first density maximum, scanned on (0, pi / k_o]."""
    r = np.linspace(0.0, np.pi / mode.k_o, n)
    density = density_profile(mode, r)[:, 1]
    i = int(np.argmax(density))
    return float(r[i])


def profile_table(mode: PhotonMode, r_samples) -> np.ndarray:
    """Columns r, density, Re u, Im u, Re v, Im v at z = 0, phi = 0."""
    r = np.asarray(r_samples, dtype=float)
    comps = eval_components(mode, 0.0, r, 0.0)
    density = np.sum(np.abs(comps) ** 2, axis=0)
    return np.column_stack([r, density, comps[0].real, comps[0].imag, comps[1].real, comps[1].imag])
