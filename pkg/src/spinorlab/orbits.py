"""Closed-orbit search for spinor configurations and the phase-quantisation integral.

The four-spinor square puts two plus and two minus particles on the sides
of a square. Plus particles run counter-clockwise and minus particles run
clockwise. Each corner is an opposite-sign contact that turns both
particles onto the next side. A candidate is scored by how far the state
after one period is from the initial state.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np
from scipy.optimize import minimize

from .errors import PreconditionError
from .semiclassical import SimConfig, SpinorParticle, TrajectoryRecord, reflecting_momentum, run

# closure residual assigned to parameter sets outside the feasible region
PENALTY = 1e6

# free flight needs no fine steps; contacts are located by bisection
ORBIT_CONFIG = SimConfig(dt_max=0.25)

DEFAULT_STEPS = {"side": 0.5, "momentum": 0.05, "phase": 0.05, "period_scale": 0.02}


def square_particles(side: float, momentum: float, phase: float = 0.0) -> list[SpinorParticle]:
    """Four particles on the sides of a square centred at the origin.

    Each starts a fraction ``0.5 + phase`` of the way along its side.
    """
    h = side / 2
    f = (0.5 + phase) * side
    x, y = np.array([1.0, 0, 0]), np.array([0, 1.0, 0])
    starts = [
        (np.array([-h, -h, 0]) + f * x, x, 1),
        (np.array([h, h, 0]) - f * y, -y, -1),
        (np.array([h, h, 0]) - f * x, -x, 1),
        (np.array([-h, -h, 0]) + f * y, y, -1),
    ]
    return [SpinorParticle.free(i, pos, d, momentum, sign) for i, (pos, d, sign) in enumerate(starts)]


def closure_residual(initial, final, r_o: float = 1.0) -> float:
    """Max over particles of the phase-space distance between two states.

    Positions are weighted by 1/r_o; spin and momentum directions enter as
    chord lengths between unit vectors (about one radian each).
    """
    worst = 0.0
    for a, b in zip(initial, final):
        if a.id != b.id:
            raise PreconditionError("states must list the same particles in the same order")
        dr = np.linalg.norm(b.position - a.position) / r_o
        ds = np.linalg.norm(b.spin - a.spin)
        pa = a.momentum / np.linalg.norm(a.momentum)
        pb = b.momentum / np.linalg.norm(b.momentum)
        dp = np.linalg.norm(pb - pa)
        worst = max(worst, float(np.sqrt(dr**2 + ds**2 + dp**2)))
    return worst


@dataclass
class OrbitCandidate:
    params: dict
    period: float
    residual: float
    converged: bool = False
    iterations: int = 0
    history: list = field(default_factory=list)
    record: TrajectoryRecord | None = field(default=None, repr=False)

    def report(self) -> dict:
        return {
            "params": dict(self.params),
            "period": self.period,
            "residual": self.residual,
            "converged": self.converged,
            "iterations": self.iterations,
            "history": list(self.history),
        }


def _final_state(record: TrajectoryRecord) -> list[SpinorParticle]:
    f = record.frames[-1]
    # sign is recovered from the initial frame: momentum . spin > 0 for plus
    first = record.frames[0]
    out = []
    for i, pid in enumerate(f.ids):
        sign = 1 if first.momenta[i] @ first.spins[i] > 0 else -1
        out.append(SpinorParticle(pid, f.positions[i], f.spins[i] / np.linalg.norm(f.spins[i]), f.momenta[i], sign))
    return out


def evaluate_square(params: dict, config: SimConfig) -> OrbitCandidate:
    side = params["side"]
    if not side > 2 * config.r_o:
        raise PreconditionError(f"side > 2 r_o required (side={side!r}, r_o={config.r_o!r})")
    if not params["momentum"] > 0:
        raise PreconditionError("momentum must be > 0")
    period = params.get("period_scale", 1.0) * 4 * side / config.c
    if not period > 0:
        raise PreconditionError("period must be > 0")
    particles = square_particles(side, params["momentum"], params.get("phase", 0.0))
    record = run(replace(config, t_end=period), particles)
    residual = closure_residual(particles, _final_state(record), config.r_o)
    return OrbitCandidate(dict(params), period, residual, record=record)


def four_square_scenario(side: float, momentum: float | None = None, config: SimConfig | None = None, **extra) -> OrbitCandidate:
    """Run one period guess ``T = 4 side / c`` of the square and score its closure.

    ``momentum`` defaults to the value that makes each corner contact a
    half-turn precession.
    """
    config = config or ORBIT_CONFIG
    if momentum is None:
        momentum = reflecting_momentum(config.r_o, config.hbar)
    params = {"side": float(side), "momentum": float(momentum), "phase": 0.0, "period_scale": 1.0}
    params.update(extra)
    return evaluate_square(params, config)


def find_periodic(
    candidate: OrbitCandidate,
    free_params=("side", "phase"),
    tol: float = 1e-6,
    max_iter: int = 200,
    config: SimConfig | None = None,
    steps: dict | None = None,
) -> OrbitCandidate:
    """Nelder-Mead search over ``free_params`` minimising the closure residual.

    Returns the best candidate seen. ``converged`` is set iff its residual is
    below ``tol``. Running out of iterations is not an error. Infeasible
    parameter sets score ``PENALTY`` plus their distance into the forbidden
    region, so the simplex moves back out of it.
    """
    if not tol > 0:
        raise PreconditionError("tol must be > 0")
    free_params = list(free_params)
    if not free_params:
        raise PreconditionError("free_params must be non-empty")
    unknown = set(free_params) - set(candidate.params)
    if unknown:
        raise PreconditionError(f"unknown parameters {sorted(unknown)}")
    config = config or (candidate.record.config if candidate.record is not None else ORBIT_CONFIG)
    if candidate.residual < tol:
        return replace(candidate, converged=True, iterations=0, history=[candidate.residual])
    if max_iter <= 0:
        return replace(candidate, converged=False, iterations=0, history=[candidate.residual])

    steps = {**DEFAULT_STEPS, **(steps or {})}
    x0 = np.array([candidate.params[name] for name in free_params], dtype=float)
    simplex = [x0]
    for i, name in enumerate(free_params):
        v = x0.copy()
        v[i] += steps[name]
        simplex.append(v)

    cache: dict[tuple, OrbitCandidate] = {}

    def score(x):
        key = tuple(float(v) for v in x)
        if key not in cache:
            params = {**candidate.params, **dict(zip(free_params, key))}
            try:
                cache[key] = evaluate_square(params, config)
            except PreconditionError:
                excess = max(0.0, 2 * config.r_o - params["side"]) + max(0.0, -params["momentum"])
                cache[key] = OrbitCandidate(params, float("nan"), PENALTY + excess)
        return cache[key].residual

    history = [candidate.residual]

    def track(intermediate_result):
        history.append(float(intermediate_result.fun))

    result = minimize(
        score,
        x0,
        method="Nelder-Mead",
        callback=track,
        options={"maxiter": max_iter, "initial_simplex": np.array(simplex), "xatol": 1e-10, "fatol": tol / 10},
    )
    best = cache[tuple(float(v) for v in result.x)]
    if best.residual >= candidate.residual:
        best = candidate
    return replace(best, converged=best.residual < tol, iterations=int(result.nit), history=history)


@dataclass(frozen=True)
class ClosedPath:
    points: np.ndarray
    wavenumber: np.ndarray
    closure_tol: float = 1e-9

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=float)
        k = np.broadcast_to(np.asarray(self.wavenumber, dtype=float), (len(pts) - 1,)).copy()
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "wavenumber", k)
        if len(pts) < 2:
            raise PreconditionError("a path needs at least two points")

    @property
    def gap(self) -> float:
        return float(np.linalg.norm(self.points[-1] - self.points[0]))

    @property
    def is_closed(self) -> bool:
        return self.gap <= self.closure_tol

    @classmethod
    def closed_off(cls, points, wavenumber) -> "ClosedPath":
        """Append the first point so the polyline closes; the last segment reuses the last |k|."""
        pts = np.asarray(points, dtype=float)
        k = np.broadcast_to(np.asarray(wavenumber, dtype=float), (len(pts) - 1,))
        return cls(np.vstack([pts, pts[:1]]), np.append(k, k[-1]))


def phase_integral(path: ClosedPath) -> tuple[float, int, float]:
    """Sum of |k| dl over the segments, the nearest integer multiple of 2 pi, and the miss."""
    if not path.is_closed:
        raise PreconditionError(f"path is open: endpoint gap {path.gap!r} > {path.closure_tol!r}")
    seg = np.linalg.norm(np.diff(path.points, axis=0), axis=1)
    value = float(np.sum(path.wavenumber * seg))
    n = int(round(value / (2 * np.pi)))
    return value, n, abs(value - 2 * np.pi * n)


def particle_path(record: TrajectoryRecord, pid: int, hbar: float | None = None) -> ClosedPath:
    """Closed polyline of one particle's track, with |k| = |p| / hbar per segment."""
    hbar = record.config.hbar if hbar is None else hbar
    pts = record.track(pid)
    moms = record.series("momenta", pid)
    k = np.linalg.norm(moms[:-1], axis=1) / hbar
    return ClosedPath.closed_off(pts, k)


def circle_path(radius: float, wavenumber: float, n: int = 4096, exact_length: bool = True) -> ClosedPath:
    """Regular polygon approximating a circle.

    With ``exact_length`` each chord's wavenumber is rescaled so that
    |k| times chord length equals |k| times arc length.
    """
    theta = np.linspace(0, 2 * np.pi, n + 1)
    theta[-1] = 0.0
    pts = radius * np.column_stack([np.cos(theta), np.sin(theta), np.zeros_like(theta)])
    k = np.full(n, float(wavenumber))
    if exact_length:
        chord = 2 * radius * np.sin(np.pi / n)
        k *= (2 * np.pi * radius / n) / chord
    return ClosedPath(pts, k)


def orbit_report(candidate: OrbitCandidate, pid: int = 0) -> dict:
    out = candidate.report()
    if candidate.record is not None:
        path = particle_path(candidate.record, pid)
        value, n, miss = phase_integral(path)
        out["phase_integral"] = {"particle": pid, "value": value, "n": n, "residual": miss, "endpoint_gap_before_closing": float(np.linalg.norm(candidate.record.track(pid)[-1] - candidate.record.track(pid)[0]))}
    return out
