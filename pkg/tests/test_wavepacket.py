import struct

import numpy as np
import pytest
from dataclasses import replace
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.linalg import expm

from spinorlab.algebra import PAULI, pauli_dot
from spinorlab.errors import PreconditionError
from spinorlab.planewave import helicity_spinor
from spinorlab.wavepacket import (
    SERIES_COLUMNS,
    Grid,
    GridField,
    ObservableSeries,
    evolve,
    init_gaussian,
    measure,
    read_snapshot,
    run_series,
    verify_motion_laws,
    write_snapshot,
    zb_analysis,
)

EQUAL = (2**-0.5, 2**-0.5)
SMALL = Grid((64, 64), (64.0, 64.0))


def packet(k0=(1.0, 0.3), mix=(1.0, 0.0), width=4.0, grid=SMALL, center=(0.0, 0.0)):
    return init_gaussian(grid, center, width, k0, mix)


def test_grid_validation():
    with pytest.raises(PreconditionError):
        Grid((48, 64), (1.0, 1.0))
    with pytest.raises(PreconditionError):
        Grid((64, 64, 64, 64), (1.0,) * 4)
    with pytest.raises(PreconditionError):
        Grid((64,), (0.0,))
    assert SMALL.spacing == (1.0, 1.0)
    assert SMALL.axes()[0][32] == 0.0


def test_init_normalized():
    f = packet(mix=(0.6, 0.8j))
    assert abs(f.norm() - 1) < 1e-12


def test_init_rejects_bad_input():
    with pytest.raises(PreconditionError, match="aliasing"):
        packet(width=1.5)
    with pytest.raises(PreconditionError, match="normalized"):
        packet(mix=(1.0, 1.0))
    with pytest.raises(PreconditionError, match="grid mode"):
        init_gaussian(SMALL, 0.0, (np.inf, 4.0), (0.3, 0.0))
    with pytest.raises(PreconditionError, match="edge"):
        packet(center=(20.0, 0.0))
    with pytest.raises(PreconditionError, match="beyond"):
        packet(k0=(0.0, 0.0, 1.0))


def test_positive_packet_energy_3d():
    # the spinor is fixed at chi_plus(k0) and the Gaussian has mean k0, so <sigma.k> = |k0|
    grid = Grid((64, 64, 64), (32.0, 32.0, 32.0))
    f = init_gaussian(grid, 0.0, 2.0, (0, 0, 2.0), (1, 0))
    m = measure(f)
    assert m.H == pytest.approx(2.0, abs=1e-10)
    assert np.allclose(m.p, (0, 0, 2.0), atol=1e-10)
    assert abs(measure(init_gaussian(grid, 0.0, 2.0, (0, 0, 2.0), EQUAL)).H) < 1e-12


def test_branch_sign_of_energy():
    assert measure(packet(mix=(1, 0))).H > 0
    assert measure(packet(mix=(0, 1))).H < 0
    balanced = measure(packet(mix=EQUAL))
    assert abs(balanced.H) <= balanced.eps_H and balanced.r_M is None


def test_symmetric_packet_at_rest():
    m = measure(packet(k0=(0.0, 0.0), mix=EQUAL))
    assert np.allclose(m.r, 0.0, atol=1e-12)
    assert np.allclose(m.p, 0.0, atol=1e-14)


@settings(max_examples=20, deadline=None)
@given(st.floats(-1.5, 1.5), st.floats(-1.5, 1.5), st.floats(0, 2 * np.pi))
def test_mean_momentum_matches_gaussian_oracle(kx, ky, phase):
    mix = (np.cos(0.4), np.sin(0.4) * np.exp(1j * phase))
    m = measure(packet(k0=(kx, ky), mix=mix))
    assert np.allclose(m.p[:2], (kx, ky), atol=1e-10)


def test_reversible():
    f = packet(mix=(0.6, 0.8))
    back = evolve(evolve(f, 0.37, 5), -0.37, 5)
    assert np.max(np.abs(back.psi - f.psi)) < 1e-12


def test_single_mode_matches_matrix_exponential():
    grid = Grid((16, 16), (2 * np.pi, 2 * np.pi))
    k = np.array([3.0, -2.0, 0.0])
    chi = np.array([0.3 + 0.1j, -0.7 + 0.2j])
    chi /= np.linalg.norm(chi)
    r = grid.positions()
    wave = np.exp(1j * np.tensordot(k, r, axes=1))
    f = GridField(grid, chi[:, None, None] * wave)
    t = 0.83
    expected = expm(-1j * t * pauli_dot(k)) @ chi
    out = evolve(f, t)
    assert np.max(np.abs(out.psi - expected[:, None, None] * wave)) < 1e-13


def test_zero_mode_unchanged():
    grid = Grid((8, 8), (1.0, 1.0))
    f = GridField(grid, np.array([0.6, 0.8j])[:, None, None] * np.ones(grid.shape))
    assert np.max(np.abs(evolve(f, 5.0).psi - f.psi)) < 1e-15


def test_norm_drift_over_thousand_steps():
    f = packet(mix=(0.6, 0.8))
    n0 = f.norm()
    for _ in range(1000):
        f = evolve(f, 0.01)
    assert abs(f.norm() - n0) < 1e-12
    assert f.t == pytest.approx(10.0)


def test_mode_amplitudes_and_energy_invariant():
    f = packet(mix=(0.6, 0.8))
    g = evolve(f, 7.3)
    w0 = np.sum(np.abs(f.spectrum()) ** 2, axis=0)
    w1 = np.sum(np.abs(g.spectrum()) ** 2, axis=0)
    assert np.max(np.abs(w1 - w0)) < 1e-13 * w0.max()
    a, b = measure(f), measure(g)
    assert np.max(np.abs(a.p - b.p)) < 1e-13
    assert abs(a.H - b.H) < 1e-12


def test_motion_laws_positive_packet():
    rep = verify_motion_laws(run_series(packet(), 0.05, 21))
    assert rep["momentum"]["abs"] < 1e-10
    assert rep["center_of_mass"]["rel"] < 1e-4
    assert rep["angular_momentum"]["drift"] < 1e-10


def test_velocity_and_spin_laws_converge_at_second_order():
    f = packet(mix=(0.6, 0.8))
    coarse = verify_motion_laws(run_series(f, 0.1, 21))
    fine = verify_motion_laws(run_series(f, 0.05, 21))
    for law in ("velocity", "sigma_precession"):
        assert coarse[law]["abs"] / fine[law]["abs"] == pytest.approx(4.0, rel=0.05)
    # the literal orientation sigma x p is off by the full signal
    assert fine["sigma_precession_reversed"]["rel"] > 1.9


def test_angular_momentum_over_ten_periods():
    grid = Grid((256, 256), (128.0, 128.0))
    f = init_gaussian(grid, 0.0, 4.0, (1.0, 0.0), EQUAL)
    rep = verify_motion_laws(run_series(f, np.pi / 8, 81))
    assert rep["angular_momentum"]["drift"] < 1e-6
    assert rep["center_of_mass"] is None


def test_motion_law_preconditions():
    s = run_series(packet(), 0.1, 2)
    with pytest.raises(PreconditionError):
        verify_motion_laws(s)
    s = run_series(packet(), 0.1, 3)
    s.snapshots[2] = replace(s.snapshots[2], t=0.25)
    with pytest.raises(PreconditionError, match="uniform"):
        verify_motion_laws(s)
    with pytest.raises(PreconditionError, match="increasing"):
        s.append(s.snapshots[0])


ZB_GRID = Grid((64, 256), (8 * np.pi, 256.0))


@pytest.mark.parametrize("k", [1.0, 2.0])
def test_zitterbewegung_frequency(k):
    f = init_gaussian(ZB_GRID, 0.0, (np.inf, 20.0), (k, 0.0), EQUAL)
    res = zb_analysis(run_series(f, 0.1 / k, 260))
    assert res.frequency == pytest.approx(2 * k, rel=1e-3)
    assert res.axis == 1
    # two-level amplitude c / (2 c |k|)
    assert res.amplitude == pytest.approx(0.5 / k, rel=1e-2)


def test_pure_branch_does_not_tremble():
    f = init_gaussian(ZB_GRID, 0.0, (np.inf, 20.0), (1.0, 0.0), (1, 0))
    res = zb_analysis(run_series(f, 0.1, 260))
    assert res.frequency is None and res.amplitude < 1e-6


def test_zitterbewegung_needs_enough_periods():
    f = init_gaussian(ZB_GRID, 0.0, (np.inf, 20.0), (1.0, 0.0), EQUAL)
    with pytest.raises(PreconditionError, match="periods"):
        zb_analysis(run_series(f, 0.1, 80))


def test_snapshot_round_trip(tmp_path):
    f = evolve(packet(mix=(0.6, 0.8j)), 1.25)
    path = tmp_path / "field.bin"
    write_snapshot(f, path)
    back = read_snapshot(path)
    assert np.array_equal(back.psi, f.psi)
    assert back.grid == f.grid and back.t == f.t
    raw = path.read_bytes()
    assert raw[:8] == b"SPNRFLD1"
    assert struct.unpack_from("<I2Q2d", raw, 8) == (2, 64, 64, 1.0, 1.0)
    # payload: interleaved little-endian float64 (re, im) pairs
    first = struct.unpack_from("<2d", raw, 8 + 4 + 16 + 16 + 24)
    assert first == (f.psi[0, 0, 0].real, f.psi[0, 0, 0].imag)


def test_series_csv(tmp_path):
    s = run_series(packet(mix=EQUAL), 0.1, 4)
    path = tmp_path / "series.csv"
    s.to_csv(path)
    lines = path.read_text().splitlines()
    assert lines[0].split(",") == list(SERIES_COLUMNS)
    assert len(lines) == 5
    # balanced packet: r_M columns left blank
    i = SERIES_COLUMNS.index("r_M_x")
    assert lines[1].split(",")[i] == ""


def test_measure_is_deterministic():
    f = packet(mix=(0.6, 0.8))
    a, b = measure(f), measure(f)
    assert a.H == b.H and np.array_equal(a.J, b.J) and np.array_equal(a.rH, b.rH)


def test_sigma_expectation_oracle():
    chi = helicity_spinor((0.3, -1.0, 0.5), "plus")
    grid = Grid((8,), (1.0,))
    f = GridField(grid, chi[:, None] * np.ones(8))
    expected = [np.real(chi.conj() @ s @ chi) for s in PAULI]
    assert np.allclose(measure(f).sigma, expected, atol=1e-15)
