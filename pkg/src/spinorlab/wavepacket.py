"""Spectral evolution of a two-component field under H = c sigma.p on a periodic grid.

The propagator is exact per Fourier mode: (sigma.k_hat)^2 = I gives

    exp(-i c t sigma.k) = cos(c|k|t) I - i sin(c|k|t) sigma.k_hat

so time stepping introduces no error beyond rounding. Expectation values
are taken on the grid; positions are centred so that index n/2 sits at 0.
Axes beyond the field's dimension carry zero position and wavevector.
"""

from __future__ import annotations

import csv
import struct
from dataclasses import dataclass, field, replace
from functools import lru_cache

import numpy as np
from scipy.optimize import least_squares

from .errors import OutputError, PreconditionError
from .planewave import helicity_spinor

# relative guard for r_M = <rH>/<H>
EPS_H_REL = 1e-6


@dataclass(frozen=True)
class Grid:
    """Periodic box: ``shape`` points over ``extent`` per axis."""

    shape: tuple[int, ...]
    extent: tuple[float, ...]

    def __post_init__(self):
        shape = tuple(int(n) for n in self.shape)
        extent = tuple(float(L) for L in self.extent)
        object.__setattr__(self, "shape", shape)
        object.__setattr__(self, "extent", extent)
        if len(shape) not in (1, 2, 3) or len(extent) != len(shape):
            raise PreconditionError("grid needs 1 to 3 axes with one extent per axis")
        for n in shape:
            if n < 2 or n & (n - 1):
                raise PreconditionError(f"points per axis must be a power of two >= 2, got {n}")
        if not all(L > 0 and np.isfinite(L) for L in extent):
            raise PreconditionError("extents must be finite and > 0")

    @property
    def dims(self) -> int:
        return len(self.shape)

    @property
    def spacing(self) -> tuple[float, ...]:
        return tuple(L / n for L, n in zip(self.extent, self.shape))

    @property
    def cell_volume(self) -> float:
        return float(np.prod(self.spacing))

    def axes(self) -> list[np.ndarray]:
        return [(np.arange(n) - n // 2) * h for n, h in zip(self.shape, self.spacing)]

    def positions(self) -> np.ndarray:
        """Shape ``(3, *shape)``; missing axes are zero."""
        mesh = np.meshgrid(*self.axes(), indexing="ij")
        return np.stack(list(mesh) + [np.zeros(self.shape)] * (3 - self.dims))

    def wavevectors(self) -> np.ndarray:
        """Shape ``(3, *shape)`` in FFT order; missing axes are zero."""
        ks = [2 * np.pi * np.fft.fftfreq(n, h) for n, h in zip(self.shape, self.spacing)]
        mesh = np.meshgrid(*ks, indexing="ij")
        return np.stack(list(mesh) + [np.zeros(self.shape)] * (3 - self.dims))


@dataclass(frozen=True)
class GridField:
    grid: Grid
    psi: np.ndarray
    t: float = 0.0
    c: float = 1.0
    hbar: float = 1.0

    def __post_init__(self):
        psi = np.asarray(self.psi, dtype=complex)
        object.__setattr__(self, "psi", psi)
        if psi.shape != (2, *self.grid.shape):
            raise PreconditionError(f"psi must have shape {(2, *self.grid.shape)}, got {psi.shape}")
        if not np.all(np.isfinite(psi)):
            raise PreconditionError("field has non-finite values")
        if not self.norm() > 0:
            raise PreconditionError("field has zero norm")

    def norm(self) -> float:
        return float(np.sum(np.abs(self.psi) ** 2) * self.grid.cell_volume)

    def spectrum(self) -> np.ndarray:
        return np.fft.fftn(self.psi, axes=self._axes)

    @property
    def _axes(self):
        return tuple(range(1, 1 + self.grid.dims))

    def inverse(self, spec: np.ndarray) -> np.ndarray:
        return np.fft.ifftn(spec, axes=self._axes)

    def from_spectrum(self, spec: np.ndarray, t: float | None = None) -> "GridField":
        return replace(self, psi=self.inverse(spec), t=self.t if t is None else t)


def _sigma_dot(v: np.ndarray, spinor: np.ndarray) -> np.ndarray:
    """(sigma . v) applied pointwise; ``v`` and ``spinor`` lead with (3,) and (2,)."""
    vx, vy, vz = v
    u, w = spinor
    return np.stack([vz * u + (vx - 1j * vy) * w, (vx + 1j * vy) * u - vz * w])


def init_gaussian(grid: Grid, center, width, k0, branch_mix=(1.0, 0.0), c: float = 1.0, hbar: float = 1.0) -> GridField:
    """Gaussian envelope times exp(i k0.r) with spinor ``a chi_plus(k0) + b chi_minus(k0)``.

    ``width`` is the density standard deviation, scalar or per axis. An
    infinite width makes that axis a plane wave, in which case ``k0``
    along it must be a grid mode. Finite widths must exceed two grid
    spacings and sit at least four widths from the box edge.
    """
    D = grid.dims
    center = np.broadcast_to(np.asarray(center, dtype=float), (D,))
    width = np.broadcast_to(np.asarray(width, dtype=float), (D,))
    k_in = np.asarray(k0, dtype=float).ravel()
    if k_in.size > 3:
        raise PreconditionError("k0 has more than 3 components")
    k0 = np.zeros(3)
    k0[: k_in.size] = k_in
    mix = np.asarray(branch_mix, dtype=complex)
    if mix.shape != (2,) or abs(np.vdot(mix, mix).real - 1) > 1e-12:
        raise PreconditionError("branch_mix must be a normalized pair")
    if np.any(k0[D:] != 0):
        raise PreconditionError(f"k0 has components beyond the grid's {D} axes")
    envelope = np.ones(grid.shape)
    for i, (x, h, L) in enumerate(zip(grid.axes(), grid.spacing, grid.extent)):
        w = width[i]
        shape = [1] * D
        shape[i] = -1
        if np.isinf(w):
            m = k0[i] * L / (2 * np.pi)
            if abs(m - round(m)) > 1e-9:
                raise PreconditionError(f"axis {i}: plane wave needs k0 on a grid mode (k0 L / 2pi = {m!r})")
        else:
            if not w > 2 * h:
                raise PreconditionError(f"aliasing: width {w!r} must exceed 2 spacings ({2 * h!r}) on axis {i}")
            if min(center[i] - x[0], x[-1] - center[i]) < 4 * w:
                raise PreconditionError(f"axis {i}: packet must sit >= 4 widths from the box edge")
            envelope = envelope * np.exp(-((x - center[i]) ** 2) / (4 * w**2)).reshape(shape)
        if abs(k0[i]) + (0 if np.isinf(w) else 6 / (2 * w)) >= np.pi / h:
            raise PreconditionError(f"aliasing: k0 on axis {i} is too close to the grid Nyquist limit")
    r = grid.positions()
    phase = np.exp(1j * np.tensordot(k0, r, axes=1))
    chi = mix[0] * helicity_spinor(k0, "plus") + mix[1] * helicity_spinor(k0, "minus")
    psi = chi[:, None] * (envelope * phase).ravel()[None, :]
    psi = psi.reshape(2, *grid.shape)
    psi /= np.sqrt(np.sum(np.abs(psi) ** 2) * grid.cell_volume)
    return GridField(grid, psi, 0.0, c, hbar)


def _propagate_spectrum(spec: np.ndarray, kvec: np.ndarray, c: float, t: float) -> np.ndarray:
    kmag = np.sqrt(np.sum(kvec**2, axis=0))
    theta = c * kmag * t
    # sin(c|k|t)/|k| without dividing by zero at k = 0
    s_over_k = c * t * np.sinc(theta / np.pi)
    return np.cos(theta) * spec - 1j * s_over_k * _sigma_dot(kvec, spec)


def evolve(field: GridField, dt: float, steps: int = 1) -> GridField:
    """Apply the exact propagator for ``steps * dt`` in one composite step.

    Negative ``dt`` runs backwards.
    """
    if not np.isfinite(dt) or dt == 0:
        raise PreconditionError("dt must be finite and nonzero")
    if steps < 0:
        raise PreconditionError("steps must be >= 0")
    if steps == 0:
        return field
    total = dt * steps
    spec = _propagate_spectrum(field.spectrum(), field.grid.wavevectors(), field.c, total)
    return field.from_spectrum(spec, field.t + total)


@dataclass(frozen=True)
class Snapshot:
    t: float
    norm: float
    r: np.ndarray
    p: np.ndarray
    H: float
    sigma: np.ndarray
    L: np.ndarray
    J: np.ndarray
    rH: np.ndarray
    r_M: np.ndarray | None
    sigma_cross_p: np.ndarray
    eps_H: float
    dims: int = 3


@lru_cache(maxsize=8)
def _geometry(grid: Grid):
    kvec = grid.wavevectors()
    coords = []
    for i, x in enumerate(grid.axes()):
        shape = [1] * grid.dims
        shape[i] = -1
        coords.append(x.reshape(shape))
    return kvec, np.sqrt(np.sum(kvec**2, axis=0)), coords


def _sigma_braket(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Sum over the grid of a^dagger sigma_i b, for i = x, y, z."""
    uw, wu = np.vdot(a[0], b[1]), np.vdot(a[1], b[0])
    return np.array([uw + wu, 1j * (wu - uw), np.vdot(a[0], b[0]) - np.vdot(a[1], b[1])])


def measure(field: GridField) -> Snapshot:
    """Normalized expectation values of the field.

    ``rH`` is the symmetrized product Re<psi, r H psi>. ``r_M`` is None when
    |<H>| does not exceed ``eps_H``. Components along axes the grid lacks
    are zero for r, p, rH and for the parts of r x p that need them.
    """
    g = field.grid
    D = g.dims
    dV = g.cell_volume
    psi = field.psi
    spec = field.spectrum()
    kvec, kmag, x = _geometry(g)
    hbar, c = field.hbar, field.c

    density = np.abs(psi[0]) ** 2 + np.abs(psi[1]) ** 2
    norm = float(np.sum(density) * dV)
    scale = dV / norm
    weight = np.abs(spec[0]) ** 2 + np.abs(spec[1]) ** 2
    wsum = np.sum(weight)

    r_mean = np.zeros(3)
    k_mean = np.zeros(3)
    for i in range(D):
        r_mean[i] = np.sum(x[i] * density) * scale
        k_mean[i] = np.sum(kvec[i] * weight) / wsum
    k_abs = float(np.sum(kmag * weight) / wsum)
    Hspec = c * hbar * _sigma_dot(kvec, spec)
    H = float(np.vdot(spec, Hspec).real / wsum)
    sigma = _sigma_braket(psi, psi).real * scale

    # p psi = -i hbar grad psi, spectrally; only grid axes carry momentum
    p_psi = [field.inverse(hbar * kvec[j] * spec) for j in range(D)]
    # M[j, k] = <sigma_j p_k>
    M = np.zeros((3, 3))
    for k in range(D):
        M[:, k] = _sigma_braket(psi, p_psi[k]).real * scale
    L = np.zeros(3)
    sxp = np.zeros(3)
    for i, j, k in ((0, 1, 2), (1, 2, 0), (2, 0, 1)):
        if j < D and k < D:
            L[i] = (np.vdot(psi, x[j] * p_psi[k]) - np.vdot(psi, x[k] * p_psi[j])).real * scale
        sxp[i] = M[j, k] - M[k, j]
    J = L + 0.5 * hbar * sigma

    H_psi = field.inverse(Hspec)
    rH = np.zeros(3)
    for i in range(D):
        rH[i] = np.vdot(psi, x[i] * H_psi).real * scale
    eps_H = EPS_H_REL * c * hbar * k_abs
    r_M = rH / H if abs(H) > eps_H else None
    return Snapshot(field.t, norm, r_mean, hbar * k_mean, H, sigma, L, J, rH, r_M, sxp, eps_H, D)


# scalar columns first, then vectors as _x, _y, _z; r_M is blank when undefined
SERIES_COLUMNS = ("t", "norm", "H") + tuple(
    f"{name}_{ax}" for name in ("r", "p", "sigma", "L", "J", "rH", "r_M", "sigma_cross_p") for ax in "xyz"
)


@dataclass
class ObservableSeries:
    snapshots: list[Snapshot] = field(default_factory=list)

    def append(self, snap: Snapshot) -> None:
        if self.snapshots and not snap.t > self.snapshots[-1].t:
            raise PreconditionError("series times must be strictly increasing")
        self.snapshots.append(snap)

    def __len__(self):
        return len(self.snapshots)

    def column(self, name: str) -> np.ndarray:
        if name == "r_M":
            return np.array([s.r_M if s.r_M is not None else np.full(3, np.nan) for s in self.snapshots])
        return np.array([getattr(s, name) for s in self.snapshots])

    @property
    def t(self) -> np.ndarray:
        return self.column("t")

    def rows(self):
        for s in self.snapshots:
            row = [s.t, s.norm, s.H]
            for name in ("r", "p", "sigma", "L", "J", "rH", "r_M", "sigma_cross_p"):
                v = getattr(s, name)
                row.extend([None] * 3 if v is None else [float(x) for x in v])
            yield row

    def to_csv(self, path) -> None:
        try:
            with open(path, "w", newline="") as fh:
                w = csv.writer(fh, lineterminator="\n")
                w.writerow(SERIES_COLUMNS)
                for row in self.rows():
                    w.writerow(["" if v is None else repr(float(v)) for v in row])
        except OSError as exc:
            raise OutputError(f"cannot write {path}: {exc}") from exc


def run_series(field: GridField, dt: float, samples: int) -> ObservableSeries:
    """Measure at ``t0 + j dt`` for ``j < samples``, each from the initial spectrum."""
    if not dt > 0:
        raise PreconditionError("dt must be > 0")
    if samples < 1:
        raise PreconditionError("need at least one sample")
    spec0 = field.spectrum()
    kvec = field.grid.wavevectors()
    series = ObservableSeries()
    for j in range(samples):
        t = j * dt
        state = field.from_spectrum(_propagate_spectrum(spec0, kvec, field.c, t), field.t + t)
        series.append(measure(state))
    return series


def _uniform_step(t: np.ndarray) -> float:
    if len(t) < 3:
        raise PreconditionError("need at least 3 samples")
    d = np.diff(t)
    if np.max(np.abs(d - d[0])) > 1e-9 * abs(d[0]):
        raise PreconditionError("samples must be uniformly spaced in time")
    return float(d[0])


def _central(y: np.ndarray, dt: float) -> np.ndarray:
    return (y[2:] - y[:-2]) / (2 * dt)


def _relative(lhs, rhs) -> dict:
    err = float(np.max(np.abs(lhs - rhs)))
    scale = float(max(np.max(np.abs(rhs)), np.max(np.abs(lhs)), 1e-300))
    return {"abs": err, "rel": err / scale}


def verify_motion_laws(series: ObservableSeries, c: float = 1.0, hbar: float = 1.0) -> dict:
    """Central-difference checks of the Heisenberg equations in expectation.

    Each law reports the maximum absolute and relative violation. The
    conserved quantities also report their largest drift from the first
    sample. Only components the grid resolves are checked: positions along
    its axes, and the parts of J built from them. The spin law is checked
    in the orientation that follows from i hbar d/dt psi = H psi,
    d<sigma>/dt = -(2c/hbar) <sigma x p>; the opposite orientation is
    reported as ``sigma_precession_reversed``.
    """
    dt = _uniform_step(series.t)
    D = series.snapshots[0].dims
    axes = list(range(D))
    j_axes = [i for i in range(3) if all(a < D for a in {0, 1, 2} - {i})]
    r, p, sigma, J = (series.column(n) for n in ("r", "p", "sigma", "J"))
    H, norm, sxp = series.column("H"), series.column("norm"), series.column("sigma_cross_p")
    inner = slice(1, -1)
    dsigma = _central(sigma, dt)
    report = {
        "dt": dt,
        "samples": len(series),
        "dims": D,
        "velocity": _relative(_central(r[:, axes], dt), c * sigma[inner][:, axes]),
        "momentum": {"abs": float(np.max(np.abs(_central(p, dt)))), "drift": float(np.max(np.abs(p - p[0])))},
        "energy": {"drift": float(np.max(np.abs(H - H[0])))},
        "norm": {"drift": float(np.max(np.abs(norm - norm[0])))},
        "sigma_precession": _relative(dsigma, -(2 * c / hbar) * sxp[inner]),
        "sigma_precession_reversed": _relative(dsigma, (2 * c / hbar) * sxp[inner]),
    }
    if j_axes:
        Jr = J[:, j_axes]
        report["angular_momentum"] = {"abs": float(np.max(np.abs(_central(Jr, dt)))), "drift": float(np.max(np.abs(Jr - Jr[0])))}
    else:
        report["angular_momentum"] = None
    r_M = series.column("r_M")
    if np.all(np.isfinite(r_M)):
        lhs = _central(r_M[:, axes], dt)
        report["center_of_mass"] = _relative(lhs, c**2 * p[inner][:, axes] / H[inner, None])
    else:
        report["center_of_mass"] = None
    return report


@dataclass(frozen=True)
class ZBResult:
    frequency: float | None
    amplitude: float
    axis: int | None
    fit_rms: float | None = None


def zb_analysis(series: ObservableSeries, noise_floor: float = 1e-6, min_periods: float = 4.0) -> ZBResult:
    """Angular frequency and amplitude of the trembling part of <r>(t).

    A linear drift is removed from each axis; the axis with the largest
    remainder is analysed. A windowed, zero-padded periodogram locates the
    peak, then a least-squares fit of ``a cos wt + b sin wt + c0 + c1 t``
    refines it. Remainders below ``noise_floor`` give ``frequency=None``.
    """
    t = series.t
    _uniform_step(t)
    r = series.column("r")
    tc = t - t[0]
    basis = np.column_stack([np.ones_like(tc), tc])
    resid = r - basis @ np.linalg.lstsq(basis, r, rcond=None)[0]
    axis = int(np.argmax(np.max(np.abs(resid), axis=0)))
    y = resid[:, axis]
    peak = float(np.max(np.abs(y)))
    if peak < noise_floor:
        return ZBResult(None, peak, None)

    n = len(y)
    pad = 16 * 2 ** int(np.ceil(np.log2(n)))
    power = np.abs(np.fft.rfft(y * np.hanning(n), pad)) ** 2
    omegas = 2 * np.pi * np.fft.rfftfreq(pad, tc[1] - tc[0])
    i = 1 + int(np.argmax(power[1:]))
    w0 = omegas[i]
    if w0 * tc[-1] / (2 * np.pi) < min_periods:
        raise PreconditionError(f"series spans fewer than {min_periods} periods of the dominant oscillation")

    def model(x):
        w, a, b, c0, c1 = x
        return a * np.cos(w * tc) + b * np.sin(w * tc) + c0 + c1 * tc

    lin = np.column_stack([np.cos(w0 * tc), np.sin(w0 * tc), np.ones_like(tc), tc])
    a0 = np.linalg.lstsq(lin, y, rcond=None)[0]
    fit = least_squares(lambda x: model(x) - y, np.concatenate([[w0], a0]), xtol=1e-15, ftol=1e-15, gtol=1e-15)
    w, a, b = fit.x[:3]
    amplitude = float(np.hypot(a, b))
    rms = float(np.sqrt(np.mean(fit.fun**2)))
    if amplitude < noise_floor:
        return ZBResult(None, amplitude, None, rms)
    return ZBResult(float(abs(w)), amplitude, axis, rms)


_MAGIC = b"SPNRFLD1"


def write_snapshot(field: GridField, path) -> None:
    """Binary layout, little-endian throughout.

    magic (8 bytes), dims (uint32), shape (uint64 x dims), spacing
    (float64 x dims), t, c, hbar (float64), then both components in C
    order as interleaved (re, im) float64 pairs.
    """
    g = field.grid
    header = _MAGIC + struct.pack("<I", g.dims)
    header += struct.pack(f"<{g.dims}Q", *g.shape) + struct.pack(f"<{g.dims}d", *g.spacing)
    header += struct.pack("<3d", field.t, field.c, field.hbar)
    try:
        with open(path, "wb") as fh:
            fh.write(header)
            fh.write(np.ascontiguousarray(field.psi, dtype="<c16").tobytes())
    except OSError as exc:
        raise OutputError(f"cannot write {path}: {exc}") from exc


def read_snapshot(path) -> GridField:
    try:
        with open(path, "rb") as fh:
            data = fh.read()
    except OSError as exc:
        raise OutputError(f"cannot read {path}: {exc}") from exc
    if data[:8] != _MAGIC:
        raise PreconditionError("not a field snapshot")
    (dims,) = struct.unpack_from("<I", data, 8)
    off = 12
    shape = struct.unpack_from(f"<{dims}Q", data, off)
    off += 8 * dims
    spacing = struct.unpack_from(f"<{dims}d", data, off)
    off += 8 * dims
    t, c, hbar = struct.unpack_from("<3d", data, off)
    off += 24
    psi = np.frombuffer(data, dtype="<c16", offset=off).reshape(2, *shape)
    grid = Grid(shape, tuple(n * h for n, h in zip(shape, spacing)))
    return GridField(grid, psi.astype(complex), t, c, hbar)
