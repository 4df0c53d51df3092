"""Event-driven contact dynamics of semiclassical spinors.

A free particle moves at speed c along its unit spin, and its spin is
``sign * p_hat``. When two particles come closer than ``r_o`` their total
momentum ``P`` is frozen. Both spins then precess about it according to
``ds/dt = (2c/hbar) s x P``, and each position follows its rotating spin
along an exact helix. The individual momenta turn with the spins, so the
pair's sum stays equal to the frozen ``P``. When the pair separates again,
each momentum is set to ``sign * |p| * s``, which keeps its magnitude.

Natural units are used throughout (hbar = c = r_o = 1 by default).

Only pairwise contacts exist. If a particle is near several others at once,
it pairs with the lowest-id eligible partner. Candidate pairs are scanned in
ascending ``(id_i, id_j)`` order, and a particle already in contact is
skipped until that contact ends.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field, replace

import numpy as np

from .algebra import rotate_vector, vec3
from .errors import DegenerateConfigurationError, PreconditionError

FREE = "free"
CONSTRAINED = "constrained"


@dataclass(frozen=True)
class SpinorParticle:
    id: int
    position: np.ndarray
    spin: np.ndarray
    momentum: np.ndarray
    sign: int = 1

    def __post_init__(self):
        object.__setattr__(self, "position", vec3(self.position))
        object.__setattr__(self, "spin", vec3(self.spin))
        object.__setattr__(self, "momentum", vec3(self.momentum))
        if self.sign not in (1, -1):
            raise PreconditionError(f"particle {self.id}: sign must be +1 or -1")
        if abs(np.linalg.norm(self.spin) - 1.0) > 1e-10:
            raise PreconditionError(f"particle {self.id}: |spin| must be 1")

    @classmethod
    def free(cls, id: int, position, direction, momentum: float, sign: int = 1) -> "SpinorParticle":
        """A free particle moving along ``direction`` with momentum magnitude ``momentum``."""
        s = vec3(direction)
        s = s / np.linalg.norm(s)
        return cls(id, position, s, sign * momentum * s, sign)


@dataclass(frozen=True)
class SimConfig:
    r_o: float = 1.0
    dt_max: float = 0.05
    c: float = 1.0
    hbar: float = 1.0
    t_end: float = 10.0
    record_stride: int = 1
    event_tol: float = 1e-9
    mode: str = FREE

    def __post_init__(self):
        for name in ("r_o", "dt_max", "c", "hbar", "t_end", "event_tol"):
            if not getattr(self, name) > 0:
                raise PreconditionError(f"SimConfig.{name} must be > 0")
        if self.record_stride < 1:
            raise PreconditionError("SimConfig.record_stride must be >= 1")
        if self.mode not in (FREE, CONSTRAINED):
            raise PreconditionError(f"SimConfig.mode must be {FREE!r} or {CONSTRAINED!r}")


def precession_rate(P, c: float = 1.0, hbar: float = 1.0) -> float:
    return 2.0 * c * float(np.linalg.norm(P)) / hbar


def contact_rotation(spin, P_total, dt: float, c: float = 1.0, hbar: float = 1.0) -> np.ndarray:
    """Exact solution of ds/dt = (2c/hbar) s x P over ``dt`` for constant P.

    This is a rotation about ``-P_hat`` by ``2 c |P| dt / hbar``.
    """
    if dt < 0:
        raise PreconditionError("dt must be >= 0")
    P = vec3(P_total)
    norm = np.linalg.norm(P)
    if norm == 0.0:
        return vec3(spin)
    return rotate_vector(P / norm, -precession_rate(P, c, hbar) * dt, spin)


def helix_displacement(spin, P_total, dt: float, c: float = 1.0, hbar: float = 1.0) -> np.ndarray:
    """Integral of ``c s(t)`` over ``[0, dt]`` while ``s`` precesses about ``P``."""
    s = vec3(spin)
    P = vec3(P_total)
    omega = precession_rate(P, c, hbar)
    if omega == 0.0:
        return c * s * dt
    n = P / np.linalg.norm(P)
    s_par = (s @ n) * n
    s_perp = s - s_par
    wt = omega * dt
    # (1 - cos wt) written as 2 sin^2(wt/2) to keep digits when wt is small
    return c * (s_par * dt + s_perp * np.sin(wt) / omega - np.cross(n, s_perp) * 2 * np.sin(wt / 2) ** 2 / omega)


def detect_contacts(particles, r_o: float) -> set[tuple[int, int]]:
    """Unordered id pairs ``(i, j)``, ``i < j``, closer than ``r_o``."""
    out = set()
    for a, b in itertools.combinations(particles, 2):
        if np.linalg.norm(a.position - b.position) < r_o:
            out.add((min(a.id, b.id), max(a.id, b.id)))
    return out


@dataclass
class ContactInterval:
    pair: tuple[int, int]
    t_entry: float
    P: np.ndarray
    entry_spins: tuple[np.ndarray, np.ndarray]
    entry_momenta: tuple[np.ndarray, np.ndarray]
    t_exit: float | None = None
    exit_spins: tuple[np.ndarray, np.ndarray] | None = None
    exit_momenta: tuple[np.ndarray, np.ndarray] | None = None


@dataclass(frozen=True)
class Frame:
    t: float
    ids: tuple[int, ...]
    positions: np.ndarray
    spins: np.ndarray
    momenta: np.ndarray
    in_contact: np.ndarray
    contacts: tuple[tuple[int, int], ...]
    total_momentum: np.ndarray
    planarity: float
    plane_offset: float
    speeds: np.ndarray


@dataclass
class TrajectoryRecord:
    config: SimConfig
    frames: list[Frame] = field(default_factory=list)
    contacts: list[ContactInterval] = field(default_factory=list)

    @property
    def times(self) -> np.ndarray:
        return np.array([f.t for f in self.frames])

    def track(self, pid: int) -> np.ndarray:
        """Positions of one particle over all frames, shape (n_frames, 3)."""
        i = self.frames[0].ids.index(pid)
        return np.array([f.positions[i] for f in self.frames])

    def series(self, attr: str, pid: int) -> np.ndarray:
        i = self.frames[0].ids.index(pid)
        return np.array([getattr(f, attr)[i] for f in self.frames])


def coplanarity(particles, r_o: float = 1.0) -> tuple[float, np.ndarray]:
    """Deviation of positions, spins and momentum directions from one common plane.

    Returns ``(residual, normal)``. The residual is the largest component
    along the best-fit normal, taken over the rows: centred positions in
    units of ``r_o``, unit spins, and unit momenta.
    """
    pos = np.array([p.position for p in particles])
    rows = [(pos - pos.mean(axis=0)) / r_o]
    rows.append(np.array([p.spin for p in particles]))
    moms = np.array([p.momentum for p in particles])
    norms = np.linalg.norm(moms, axis=1)
    rows.append(moms[norms > 0] / norms[norms > 0, None])
    m = np.vstack(rows)
    _, _, vt = np.linalg.svd(m)
    normal = vt[-1]
    return float(np.max(np.abs(m @ normal))), normal


class World:
    """Mutable simulation state owned by a single run."""

    def __init__(self, particles, config: SimConfig, contacts: dict | None = None):
        self.config = config
        self.particles = sorted(particles, key=lambda p: p.id)
        ids = [p.id for p in self.particles]
        if len(set(ids)) != len(ids):
            raise PreconditionError("particle ids must be unique")
        for a, b in itertools.combinations(self.particles, 2):
            if np.linalg.norm(a.position - b.position) == 0.0:
                raise DegenerateConfigurationError(f"particles {a.id} and {b.id} coincide")
        self.t = 0.0
        self.index = {p.id: i for i, p in enumerate(self.particles)}
        # pair -> frozen total momentum
        self.active: dict[tuple[int, int], np.ndarray] = {}
        self.log: list[ContactInterval] = []
        self._open: dict[tuple[int, int], ContactInterval] = {}
        if contacts:
            for pair, P in contacts.items():
                self._activate(tuple(sorted(pair)), vec3(P))
        self._activate_pending()

    def partner_busy(self, pid: int) -> bool:
        return any(pid in pair for pair in self.active)

    def _activate(self, pair, P=None):
        i, j = self.index[pair[0]], self.index[pair[1]]
        a, b = self.particles[i], self.particles[j]
        if P is None:
            P = a.momentum + b.momentum
        self.active[pair] = P
        interval = ContactInterval(pair, self.t, P.copy(), (a.spin, b.spin), (a.momentum, b.momentum))
        self._open[pair] = interval
        self.log.append(interval)

    def _activate_pending(self):
        for pair in sorted(detect_contacts(self.particles, self.config.r_o)):
            if pair in self.active:
                continue
            if self.partner_busy(pair[0]) or self.partner_busy(pair[1]):
                continue
            self._activate(pair)

    def _deactivate(self, pair):
        P = self.active.pop(pair)
        i, j = self.index[pair[0]], self.index[pair[1]]
        a, b = self.particles[i], self.particles[j]
        pa = a.sign * np.linalg.norm(a.momentum) * a.spin
        pb = b.sign * np.linalg.norm(b.momentum) * b.spin
        sa, sb = a.spin, b.spin
        if self.config.mode == CONSTRAINED:
            # minimal-norm correction restoring the frozen pair momentum
            fix = (P - pa - pb) / 2
            pa, pb = pa + fix, pb + fix
            sa = a.sign * pa / np.linalg.norm(pa)
            sb = b.sign * pb / np.linalg.norm(pb)
        self.particles[i] = replace(a, spin=sa, momentum=pa)
        self.particles[j] = replace(b, spin=sb, momentum=pb)
        interval = self._open.pop(pair)
        interval.t_exit = self.t
        interval.exit_spins = (sa, sb)
        interval.exit_momenta = (pa, pb)

    def propagated(self, tau: float) -> list[SpinorParticle]:
        """Particles advanced by ``tau`` with the contact set held fixed."""
        cfg = self.config
        out = list(self.particles)
        paired = {}
        for pair, P in self.active.items():
            paired[pair[0]] = P
            paired[pair[1]] = P
        for i, p in enumerate(self.particles):
            if p.id in paired:
                P = paired[p.id]
                pos = p.position + helix_displacement(p.spin, P, tau, cfg.c, cfg.hbar)
                spin = contact_rotation(p.spin, P, tau, cfg.c, cfg.hbar)
                # momenta turn with the spins; their sum is P, which the rotation fixes
                mom = contact_rotation(p.momentum, P, tau, cfg.c, cfg.hbar)
            else:
                pos = p.position + cfg.c * p.spin * tau
                spin, mom = p.spin, p.momentum
            out[i] = replace(p, position=pos, spin=spin, momentum=mom)
        return out

    def _flipped(self, pair, particles) -> bool:
        a, b = particles[self.index[pair[0]]], particles[self.index[pair[1]]]
        inside = np.linalg.norm(a.position - b.position) < self.config.r_o
        return not inside if pair in self.active else inside

    def _watched_pairs(self):
        for a, b in itertools.combinations(self.particles, 2):
            pair = (a.id, b.id)
            if pair in self.active:
                yield pair
            elif not (self.partner_busy(a.id) or self.partner_busy(b.id)):
                if np.linalg.norm(a.position - b.position) >= self.config.r_o:
                    yield pair

    def step(self) -> bool:
        """Advance to the next event or by ``dt_max``; returns True if an event fired."""
        cfg = self.config
        delta = min(cfg.dt_max, cfg.t_end - self.t)
        trial = self.propagated(delta)
        flipping = [pair for pair in self._watched_pairs() if self._flipped(pair, trial)]
        if not flipping:
            self.particles = trial
            self.t += delta
            return False
        t_hit = delta
        for pair in flipping:
            lo, hi = 0.0, delta
            while hi - lo > cfg.event_tol:
                mid = 0.5 * (lo + hi)
                if self._flipped(pair, self.propagated(mid)):
                    hi = mid
                else:
                    lo = mid
            t_hit = min(t_hit, hi)
        self.particles = self.propagated(t_hit)
        self.t += t_hit
        for pair in sorted(self.active):
            if self._flipped(pair, self.particles):
                self._deactivate(pair)
        self._activate_pending()
        return True


def step(world: World, config: SimConfig | None = None) -> World:
    if config is not None and config is not world.config:
        world.config = config
    world.step()
    return world


def _frame(world: World, plane) -> Frame:
    ps = world.particles
    in_contact = np.array([world.partner_busy(p.id) for p in ps])
    residual, _ = coplanarity(ps, world.config.r_o)
    normal, origin = plane
    pos = np.array([p.position for p in ps])
    spins = np.array([p.spin for p in ps])
    offset = max(np.max(np.abs((pos - origin) @ normal)) / world.config.r_o, np.max(np.abs(spins @ normal)))
    momenta = np.array([p.momentum for p in ps])
    return Frame(
        t=world.t,
        ids=tuple(p.id for p in ps),
        positions=pos,
        spins=spins,
        momenta=momenta,
        in_contact=in_contact,
        contacts=tuple(sorted(world.active)),
        total_momentum=momenta.sum(axis=0),
        planarity=residual,
        plane_offset=float(offset),
        speeds=world.config.c * np.linalg.norm(spins, axis=1),
    )


def run(config: SimConfig, particles, contacts: dict | None = None) -> TrajectoryRecord:
    """Simulate from ``t = 0`` to ``config.t_end``.

    Frames are recorded at the start, after every ``record_stride`` steps,
    at every contact event, and at the end.
    """
    particles = list(particles)
    if not particles:
        raise PreconditionError("run needs at least one particle")
    world = World(particles, config, contacts)
    _, normal = coplanarity(world.particles, config.r_o)
    plane = (normal, np.mean([p.position for p in world.particles], axis=0))
    record = TrajectoryRecord(config)
    record.frames.append(_frame(world, plane))
    n = 0
    while world.t < config.t_end:
        try:
            event = world.step()
        except PreconditionError as exc:
            raise type(exc)(f"at t={world.t!r}: {exc}") from exc
        n += 1
        if event or n % config.record_stride == 0 or world.t >= config.t_end:
            record.frames.append(_frame(world, plane))
    record.contacts = world.log
    return record


def signed_angle(a, b, axis) -> float:
    """Angle in [0, 2 pi) turning ``a`` into ``b`` right-handedly about ``axis``."""
    n = vec3(axis) / np.linalg.norm(axis)
    a = vec3(a) - (vec3(a) @ n) * n
    b = vec3(b) - (vec3(b) @ n) * n
    ang = np.arctan2(np.cross(a, b) @ n, a @ b)
    return float(np.mod(ang, 2 * np.pi))


def collision_summary(record: TrajectoryRecord) -> list[dict]:
    """Per completed contact: timing, in/out vectors, rotation angle and conservation residuals.

    The rotation angle is measured in the precession sense (about -P_hat)
    from the first particle's entry spin to its exit spin. It is reduced to
    [0, 2 pi) and a value within 1e-9 of 2 pi is folded to 0.
    """
    out = []
    cfg = record.config
    for c in record.contacts:
        if c.t_exit is None:
            continue
        P_in = c.entry_momenta[0] + c.entry_momenta[1]
        P_out = c.exit_momenta[0] + c.exit_momenta[1]
        sig_in = np.sum((c.entry_spins[0] + c.entry_spins[1]) ** 2)
        sig_out = np.sum((c.exit_spins[0] + c.exit_spins[1]) ** 2)
        angle = 0.0
        if np.linalg.norm(c.P) > 0:
            angle = signed_angle(c.entry_spins[0], c.exit_spins[0], -c.P)
            if 2 * np.pi - angle < 1e-9:
                angle = 0.0
        out.append(
            {
                "pair": list(c.pair),
                "t_entry": c.t_entry,
                "t_exit": c.t_exit,
                "P": c.P.tolist(),
                "entry_spins": [s.tolist() for s in c.entry_spins],
                "exit_spins": [s.tolist() for s in c.exit_spins],
                "entry_momenta": [p.tolist() for p in c.entry_momenta],
                "exit_momenta": [p.tolist() for p in c.exit_momenta],
                "rotation_angle": angle,
                "expected_angle": float(np.mod(precession_rate(c.P, cfg.c, cfg.hbar) * (c.t_exit - c.t_entry), 2 * np.pi)),
                "dP_total": float(np.linalg.norm(P_out - P_in)),
                "dsigma2_total": float(abs(sig_out - sig_in)),
            }
        )
    return out


def exit_angle_difference(summary: dict) -> float:
    """Difference between the two outgoing spins' angles to the total-momentum line."""
    n = np.asarray(summary["P"], dtype=float)
    n = n / np.linalg.norm(n)
    angles = [np.arccos(np.clip(abs(np.dot(s, n)), 0.0, 1.0)) for s in summary["exit_spins"]]
    return float(abs(angles[0] - angles[1]))


def symmetric_encounter(
    half_angle: float, distance: float, momentum: float, signs=(1, -1), id_offset: int = 0
) -> list[SpinorParticle]:
    """Two particles mirror-imaged through x -> -x, aimed at the origin.

    Each moves at ``half_angle`` from the +y axis and arrives at the origin
    at ``t = distance / c``. With opposite signs the total momentum lies
    along x; with equal signs it lies along y.
    """
    s_a = np.array([np.sin(half_angle), np.cos(half_angle), 0.0])
    s_b = np.array([-s_a[0], s_a[1], 0.0])
    return [
        SpinorParticle.free(id_offset, -distance * s_a, s_a, momentum, signs[0]),
        SpinorParticle.free(id_offset + 1, -distance * s_b, s_b, momentum, signs[1]),
    ]


def reflecting_momentum(r_o: float = 1.0, hbar: float = 1.0) -> float:
    """Momentum at which a symmetric crossing precesses by exactly pi.

    For two particles crossing through the contact sphere, the precession
    angle is ``4 |p| r_o / hbar`` whatever the approach angle.
    """
    return np.pi * hbar / (4 * r_o)


CSV_COLUMNS = ("t", "id", "x", "y", "z", "sx", "sy", "sz", "px", "py", "pz", "in_contact")


def trajectory_rows(record: TrajectoryRecord):
    for f in record.frames:
        for i, pid in enumerate(f.ids):
            yield (f.t, pid, *f.positions[i], *f.spins[i], *f.momenta[i], int(f.in_contact[i]))
