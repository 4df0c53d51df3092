import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from spinorlab.algebra import pauli_dot
from spinorlab.errors import PreconditionError
from spinorlab.planewave import (
    PlaneWaveSpinor,
    analytic_residual,
    apply_hamiltonian,
    convergence_order,
    eigen_residual,
    evaluate,
    helicity_spinor,
)

wavevectors = st.tuples(*[st.floats(-50, 50)] * 3).map(np.array).filter(lambda k: np.linalg.norm(k) > 1e-6)


def test_eigenstates_along_z_are_basis_vectors():
    k = (0, 0, 3.0)
    assert np.array_equal(evaluate(PlaneWaveSpinor(k, "plus"), (0, 0, 0)), [1, 0])
    assert np.array_equal(evaluate(PlaneWaveSpinor(k, "minus"), (0, 0, 0)), [0, 1])


def test_plus_branch_along_x():
    psi = evaluate(PlaneWaveSpinor((2.0, 0, 0), "plus"), (0, 0, 0))
    assert np.allclose(psi, np.array([1, 1]) / np.sqrt(2), atol=1e-15)


def test_eigenvalues_carry_c_hbar():
    r = (0.1, 0.2, 0.3)
    for branch, expected in (("plus", 2.0), ("minus", -2.0)):
        h_psi, lam = apply_hamiltonian(PlaneWaveSpinor((0, 2.0, 0), branch), r)
        assert lam == expected
        assert np.allclose(h_psi, lam * evaluate(PlaneWaveSpinor((0, 2.0, 0), branch), r), atol=1e-14)
    _, lam = apply_hamiltonian(PlaneWaveSpinor((0, 2.0, 0)), r, c=3.0, hbar=0.5)
    assert lam == 3.0


def test_zero_momentum():
    h_psi, lam = apply_hamiltonian(PlaneWaveSpinor((0, 0, 0)), (1, 2, 3))
    assert lam == 0.0 and np.array_equal(h_psi, [0, 0])
    assert eigen_residual(PlaneWaveSpinor((0, 0, 0)), [(0, 0, 0), (1, 1, 1)]) == 0.0


def test_fd_residual_bound_and_order():
    state = PlaneWaveSpinor((1.0, 0, 0), "plus")
    samples = [(0, 0, 0), (0.5, -1, 2)]
    h = 1e-3
    res = eigen_residual(state, samples, h)
    # truncation of the central difference: |k|^2 h^2 / 6
    assert res < 1e-5
    assert res == pytest.approx(h**2 / 6, rel=1e-3)
    ratio = res / eigen_residual(state, samples, h / 2)
    assert ratio == pytest.approx(4.0, rel=0.02)


def test_empty_samples_rejected():
    with pytest.raises(PreconditionError):
        eigen_residual(PlaneWaveSpinor((1, 0, 0)), [])


@given(wavevectors, st.sampled_from(["plus", "minus"]))
def test_analytic_eigen_equation(k, branch):
    state = PlaneWaveSpinor(k, branch)
    assert analytic_residual(state, (0.3, -0.2, 0.7)) < 1e-12
    chi = helicity_spinor(k, branch)
    khat = k / np.linalg.norm(k)
    assert np.allclose(pauli_dot(khat) @ chi, state.sign * chi, atol=1e-14)


@given(wavevectors)
def test_branches_orthogonal(k):
    plus, minus = helicity_spinor(k, "plus"), helicity_spinor(k, "minus")
    assert abs(np.vdot(plus, minus)) <= 1e-15


@given(wavevectors, st.floats(-10, 10), st.sampled_from(["plus", "minus"]))
def test_time_evolution_preserves_norm(k, t, branch):
    state = PlaneWaveSpinor(k, branch, amplitude=0.5 - 0.25j)
    psi = evaluate(state, (1.0, 2.0, -1.0), t)
    assert np.linalg.norm(psi) == pytest.approx(abs(state.amplitude), rel=1e-13)


def test_random_k_order_two():
    rng = np.random.default_rng(3)
    for _ in range(20):
        state = PlaneWaveSpinor(rng.normal(size=3), rng.choice(["plus", "minus"]))
        assert convergence_order(state, [rng.normal(size=3)], 1e-2) == pytest.approx(2.0, abs=0.2)
