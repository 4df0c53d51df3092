import numpy as np
import pytest
from dataclasses import replace
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.spatial.transform import Rotation

from spinorlab.errors import PreconditionError
from spinorlab.orbits import (
    PENALTY,
    ClosedPath,
    OrbitCandidate,
    circle_path,
    closure_residual,
    find_periodic,
    four_square_scenario,
    orbit_report,
    phase_integral,
    square_particles,
)
from spinorlab.semiclassical import SimConfig, SpinorParticle, run


def test_circle_integer_and_half_integer():
    value, n, miss = phase_integral(circle_path(1.0, 3.0))
    assert value == pytest.approx(6 * np.pi, abs=1e-10)
    assert n == 3 and miss < 1e-10
    value, n, miss = phase_integral(circle_path(1.0, 2.5))
    assert n in (2, 3)
    assert miss == pytest.approx(np.pi, abs=1e-10)


def test_polygon_chords_converge_to_circumference():
    raw = [phase_integral(circle_path(1.0, 3.0, n=n, exact_length=False))[0] for n in (64, 128)]
    errs = [6 * np.pi - v for v in raw]
    assert errs[0] > 0 and errs[0] / errs[1] == pytest.approx(4.0, rel=1e-2)


def test_open_path_rejected():
    with pytest.raises(PreconditionError):
        phase_integral(ClosedPath([[0, 0, 0], [1, 0, 0], [1, 1, 0]], 1.0))


coords = st.floats(-5, 5)
polyline = st.lists(st.tuples(coords, coords, coords), min_size=2, max_size=12).map(np.array)


@settings(max_examples=100)
@given(polyline, polyline, st.floats(0.1, 4))
def test_additive_over_concatenation(a, b, k):
    # a closes through b: a, then a bridge to b, then b, then back
    loop = np.vstack([a, b, a[:1]])
    whole = phase_integral(ClosedPath(loop, k))[0]
    first = np.sum(k * np.linalg.norm(np.diff(np.vstack([a, b[:1]]), axis=0), axis=1))
    second = np.sum(k * np.linalg.norm(np.diff(np.vstack([b, a[:1]]), axis=0), axis=1))
    assert whole == pytest.approx(first + second, abs=1e-10 * max(1.0, whole))


@settings(max_examples=100)
@given(polyline, st.integers(0, 2**31), st.tuples(coords, coords, coords))
def test_rigid_motion_invariance(a, seed, shift):
    loop = np.vstack([a, a[:1]])
    k = np.linspace(0.5, 2.0, len(loop) - 1)
    rot = Rotation.random(random_state=seed).as_matrix()
    moved = loop @ rot.T + np.array(shift)
    moved[-1] = moved[0]
    base = phase_integral(ClosedPath(loop, k))[0]
    assert phase_integral(ClosedPath(moved, k))[0] == pytest.approx(base, abs=1e-10 * max(1.0, base))


def test_square_layout():
    ps = square_particles(6.0, 0.5)
    assert [p.sign for p in ps] == [1, -1, 1, -1]
    # each starts mid-side with spin along the side
    for p in ps:
        assert np.max(np.abs(p.position)) == pytest.approx(3.0)
        assert abs(p.spin @ p.position) < 1e-15
    # plus particles run counter-clockwise, minus clockwise
    for p in ps:
        assert np.sign(np.cross(p.position, p.spin)[2]) == p.sign


def test_four_square_reports_finite_residual():
    cand = four_square_scenario(10.0)
    assert np.isfinite(cand.residual) and cand.residual >= 0
    assert cand.period == pytest.approx(40.0)
    assert len(cand.record.contacts) >= 4
    report = orbit_report(cand)
    assert report["phase_integral"]["n"] == round(report["phase_integral"]["value"] / (2 * np.pi))


def test_square_residual_continuous_in_side():
    r = [four_square_scenario(s).residual for s in (10.0, 10.01, 20.0)]
    assert all(np.isfinite(r))
    assert abs(r[1] - r[0]) < 0.05


@pytest.mark.parametrize("side", [0.0, 2.0, -1.0])
def test_infeasible_side(side):
    with pytest.raises(PreconditionError, match="side > 2 r_o"):
        four_square_scenario(side)


def test_search_is_monotone_and_never_worse():
    start = four_square_scenario(6.0)
    found = find_periodic(start, ("side", "phase"), tol=1e-6, max_iter=4)
    h = found.history
    assert h[0] == start.residual
    assert all(b <= a for a, b in zip(h, h[1:]))
    assert found.residual <= start.residual
    assert found.converged is (found.residual < 1e-6)


def test_search_walks_out_of_penalty():
    # a large first step on side lands in the forbidden region
    start = four_square_scenario(2.5)
    found = find_periodic(start, ("side",), max_iter=3, steps={"side": -2.0})
    assert found.residual < PENALTY
    assert found.params["side"] > 2.0


def test_closed_candidate_returned_unchanged():
    cand = OrbitCandidate({"side": 5.0, "momentum": 1.0, "phase": 0.0}, 20.0, 1e-9)
    found = find_periodic(cand, ("side",), tol=1e-6)
    assert found.converged and found.iterations == 0
    assert found.params == cand.params and found.residual == cand.residual


def test_exhausted_search_is_not_an_error():
    start = four_square_scenario(6.0)
    found = find_periodic(start, ("side",), max_iter=0)
    assert not found.converged and found.residual == start.residual


def test_search_preconditions():
    cand = OrbitCandidate({"side": 5.0}, 1.0, 1.0)
    with pytest.raises(PreconditionError):
        find_periodic(cand, (), tol=1e-6)
    with pytest.raises(PreconditionError):
        find_periodic(cand, ("side",), tol=0.0)
    with pytest.raises(PreconditionError):
        find_periodic(cand, ("speed",))


def circling_pair():
    # two identical spins locked in contact circle about P = z with period pi
    P = np.array([0.0, 0.0, 1.0])
    a = SpinorParticle(0, (0, 0, 0), (1, 0, 0), P / 2)
    b = SpinorParticle(1, (0.5, 0, 0), (1, 0, 0), P / 2)
    return [a, b], {(0, 1): P}


def state_at(particles, contacts, t):
    if t == 0:
        return particles
    f = run(SimConfig(t_end=t), particles, contacts).frames[-1]
    return [replace(p, position=f.positions[i], spin=f.spins[i], momentum=f.momenta[i]) for i, p in enumerate(particles)]


@pytest.mark.parametrize("shift", [0.0, 0.37, 1.9])
def test_time_shift_leaves_closure_unchanged(shift):
    particles, contacts = circling_pair()
    start = state_at(particles, contacts, shift)
    after = state_at(start, contacts, np.pi)
    base = closure_residual(particles, state_at(particles, contacts, np.pi))
    assert abs(closure_residual(start, after) - base) < 1e-9
