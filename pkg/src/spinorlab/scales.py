"""SI evaluation of the interaction formulas and the order-of-magnitude estimates.

All inputs and outputs are SI. Each formula is dimension-checked when the
module is imported (see :mod:`spinorlab.units`).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

from .errors import PreconditionError
from .units import (
    ACTION,
    CHARGE,
    DIMENSIONLESS,
    ENERGY,
    ENERGY_SQUARED,
    GRAVITATION,
    LENGTH,
    MASS,
    MOMENTUM,
    PERMITTIVITY,
    VELOCITY,
    WAVENUMBER,
    formula,
)

# CODATA 2018 recommended values
CODATA_2018 = {
    "c": 299792458.0,
    "hbar": 1.054571817e-34,
    "G": 6.67430e-11,
    "e": 1.602176634e-19,
    "eps0": 8.8541878128e-12,
}

# values the estimates are compared against, as quoted (one figure)
QUOTED = {
    "planck_length_m": 1e-35,
    "fine_structure": 1 / 137,
    "planck_energy_J": 1e9,
    "hbar_k_o": 10.0,
    "electron_rest_energy_J": 8e-14,
    "electron_radius_m": 1e-28,
    "tube_length_m": 1e-14,
}


@formula(returns=LENGTH, hbar=ACTION, G=GRAVITATION, c=VELOCITY)
def _planck_length(hbar, G, c):
    return (hbar * G / c**3) ** 0.5


@dataclass(frozen=True)
class ScaleContext:
    c: float = CODATA_2018["c"]
    hbar: float = CODATA_2018["hbar"]
    G: float = CODATA_2018["G"]
    e: float = CODATA_2018["e"]
    eps0: float = CODATA_2018["eps0"]
    r_o: float = field(default=None)

    def __post_init__(self):
        if self.r_o is None:
            object.__setattr__(self, "r_o", _planck_length(self.hbar, self.G, self.c))
        for name in ("c", "hbar", "G", "e", "eps0", "r_o"):
            value = getattr(self, name)
            if not (math.isfinite(value) and value > 0):
                raise PreconditionError(f"ScaleContext.{name} must be positive and finite, got {value!r}")

    @property
    def k_o(self) -> float:
        return 1.0 / self.r_o

    @property
    def p_o(self) -> float:
        """Bare spinor momentum hbar * k_o."""
        return self.hbar * self.k_o

    @property
    def planck_energy(self) -> float:
        return _planck_energy(self.hbar, self.c, self.r_o)

    def with_(self, **changes) -> "ScaleContext":
        return replace(self, **changes)


@formula(returns=ENERGY, hbar=ACTION, c=VELOCITY, r_o=LENGTH)
def _planck_energy(hbar, c, r_o):
    return hbar * c / r_o


@dataclass(frozen=True)
class InteractionSpec:
    p1p: float
    p2p: float
    p_u: float
    r: float

    def __post_init__(self):
        for name in ("p1p", "p2p", "p_u"):
            if not getattr(self, name) > 0:
                raise PreconditionError(f"InteractionSpec.{name} must be > 0")
        if self.r == 0:
            raise PreconditionError("interaction distance r = 0 is a singularity")
        if not self.r > 0:
            raise PreconditionError("interaction distance r must be > 0")

    def r_u(self, ctx: ScaleContext) -> float:
        return ctx.hbar / self.p_u


@formula(returns=ENERGY, p1p=MOMENTUM, p2p=MOMENTUM, p_u=MOMENTUM, r=LENGTH, c=VELOCITY, hbar=ACTION)
def _interaction_energy(p1p, p2p, p_u, r, c, hbar):
    return c * hbar * p1p * p2p / (p_u**2 * r)


@formula(returns=DIMENSIONLESS, e=CHARGE, eps0=PERMITTIVITY, hbar=ACTION, c=VELOCITY)
def _coupling(e, eps0, hbar, c):
    return e**2 / (4 * math.pi * eps0 * hbar * c)


@formula(returns=ENERGY, e=CHARGE, eps0=PERMITTIVITY, r=LENGTH)
def _coulomb(e, eps0, r):
    return e**2 / (4 * math.pi * eps0 * r)


@formula(returns=ENERGY, G=GRAVITATION, m1=MASS, m2=MASS, r=LENGTH)
def _newton(G, m1, m2, r):
    return G * m1 * m2 / r


@formula(returns=ENERGY, c=VELOCITY, m1=MASS, m2=MASS, r_o=LENGTH, hbar=ACTION, r=LENGTH)
def _gravity_from_spinors(c, m1, m2, r_o, hbar, r):
    return c * (c * m1) * (c * m2) * r_o**2 / (hbar * r)


@formula(returns=LENGTH, r_o=LENGTH, e_planck=ENERGY, e_rest=ENERGY)
def _ball_radius(r_o, e_planck, e_rest):
    return r_o * (e_planck / e_rest) ** (1 / 3)


@formula(returns=LENGTH, R=LENGTH, r_o=LENGTH)
def _tube_length(R, r_o):
    return (R / r_o) ** 3 * r_o


@formula(returns=ENERGY_SQUARED, hbar=ACTION, c=VELOCITY, k=WAVENUMBER, k_o=WAVENUMBER)
def _hsq(hbar, c, k, k_o):
    return hbar**2 * c**2 * (k**2 + k_o**2)


def interaction_energy_reduction(spec: InteractionSpec, ctx: ScaleContext) -> float:
    """Energy reduction c hbar p1p p2p / (p_u^2 r), in joule."""
    return _interaction_energy(spec.p1p, spec.p2p, spec.p_u, spec.r, ctx.c, ctx.hbar)


def coulomb_energy(r: float, ctx: ScaleContext) -> float:
    if r == 0:
        raise PreconditionError("Coulomb energy at r = 0 is singular")
    return _coulomb(ctx.e, ctx.eps0, r)


def coulomb_reduction_factor(ctx: ScaleContext) -> float:
    """The factor p1p p2p / p_u^2 that makes the reduction equal e^2/(4 pi eps0 r)."""
    return _coupling(ctx.e, ctx.eps0, ctx.hbar, ctx.c)


def planck_length_from_G(ctx: ScaleContext) -> float:
    """Solve G = c^3 r_o^2 / hbar for r_o; ``ctx.r_o`` is ignored."""
    return _planck_length(ctx.hbar, ctx.G, ctx.c)


def gravitational_residual(m1: float, m2: float, r: float, ctx: ScaleContext) -> float:
    """Relative mismatch between G m1 m2 / r and c (c m1)(c m2) r_o^2 / (hbar r)."""
    if r == 0:
        raise PreconditionError("gravitational interaction at r = 0 is singular")
    if not (m1 > 0 and m2 > 0 and r > 0):
        raise PreconditionError("masses and distance must be positive")
    newton = _newton(ctx.G, m1, m2, r)
    spinor = _gravity_from_spinors(ctx.c, m1, m2, ctx.r_o, ctx.hbar, r)
    return abs(spinor - newton) / newton


def electron_radius_estimate(e_rest: float, ctx: ScaleContext, e_planck: float | None = None) -> float:
    """Radius R = r_o (E_planck / E_rest)^(1/3) of a ball of Planck cells.

    ``e_planck`` defaults to hbar c / r_o; pass a rounded figure to
    reproduce a hand estimate.
    """
    e_planck = ctx.planck_energy if e_planck is None else e_planck
    if not 0 < e_rest < e_planck:
        raise PreconditionError(f"need 0 < E_rest < E_planck, got E_rest={e_rest!r}, E_planck={e_planck!r}")
    return _ball_radius(ctx.r_o, e_planck, e_rest)


def tube_length_estimate(R: float, ctx: ScaleContext) -> float:
    """Tube length (R/r_o)^3 r_o: one Planck cell visited per cycle."""
    if not R > ctx.r_o:
        raise PreconditionError(f"need R > r_o, got R={R!r}, r_o={ctx.r_o!r}")
    return _tube_length(R, ctx.r_o)


def hsq_energy_squared(k: float, k_o: float, ctx: ScaleContext) -> float:
    return _hsq(ctx.hbar, ctx.c, k, k_o)


def order_of_magnitude(x: float) -> int:
    return math.floor(math.log10(abs(x)))


def within_orders(value: float, quoted: float, orders: int = 1) -> bool:
    """True when the decade exponents of value and quoted differ by at most ``orders``."""
    return abs(order_of_magnitude(value) - order_of_magnitude(quoted)) <= orders


def _entry(formula_id, inputs, result, unit, quoted=None):
    out = {"formula": formula_id, "inputs": inputs, "result": result, "unit": unit}
    if quoted is not None:
        out["quoted"] = quoted
        out["ratio"] = result / quoted
    return out


def scales_report(ctx: ScaleContext | None = None, e_rest: float = 8.187105776e-14) -> dict:
    """All estimates for one context, plus the rounded-input reproduction."""
    ctx = ctx or ScaleContext()
    r_o = planck_length_from_G(ctx)
    ctx = ctx.with_(r_o=r_o)
    alpha = coulomb_reduction_factor(ctx)
    radius = electron_radius_estimate(e_rest, ctx)

    rounded = ctx.with_(r_o=QUOTED["planck_length_m"])
    rounded_radius = electron_radius_estimate(
        QUOTED["electron_rest_energy_J"], rounded, e_planck=QUOTED["planck_energy_J"]
    )
    rounded_tube = tube_length_estimate(rounded_radius, rounded)

    return {
        "constants": {"c": ctx.c, "hbar": ctx.hbar, "G": ctx.G, "e": ctx.e, "eps0": ctx.eps0},
        "planck_length": _entry("r_o = sqrt(hbar G / c^3)", {}, r_o, "m", QUOTED["planck_length_m"]),
        "coulomb_reduction_factor": dict(
            _entry("e^2 / (4 pi eps0 hbar c)", {}, alpha, "1", QUOTED["fine_structure"]),
            inverse=1 / alpha,
        ),
        "planck_energy": _entry("hbar c / r_o", {"r_o": r_o}, ctx.planck_energy, "J", QUOTED["planck_energy_J"]),
        # the one-figure "10 Nm" can be read as a momentum or as an energy
        "hbar_k_o_momentum_reading": _entry("hbar / r_o", {"r_o": QUOTED["planck_length_m"]}, rounded.p_o, "kg m/s", QUOTED["hbar_k_o"]),
        "hbar_k_o_energy_reading": _entry(
            "c hbar / r_o", {"r_o": QUOTED["planck_length_m"]}, rounded.planck_energy, "J", QUOTED["hbar_k_o"]
        ),
        "electron_radius": _entry(
            "r_o (E_planck / E_rest)^(1/3)", {"E_rest": e_rest, "r_o": r_o}, radius, "m", QUOTED["electron_radius_m"]
        ),
        "electron_radius_rounded_inputs": _entry(
            "r_o (E_planck / E_rest)^(1/3)",
            {"E_rest": QUOTED["electron_rest_energy_J"], "E_planck": QUOTED["planck_energy_J"], "r_o": QUOTED["planck_length_m"]},
            rounded_radius,
            "m",
            QUOTED["electron_radius_m"],
        ),
        "tube_length": _entry("(R / r_o)^3 r_o", {"R": radius, "r_o": r_o}, tube_length_estimate(radius, ctx), "m", QUOTED["tube_length_m"]),
        "tube_length_rounded_inputs": _entry(
            "(R / r_o)^3 r_o", {"R": rounded_radius, "r_o": QUOTED["planck_length_m"]}, rounded_tube, "m", QUOTED["tube_length_m"]
        ),
        "tube_length_quoted_radius": _entry(
            "(R / r_o)^3 r_o",
            {"R": QUOTED["electron_radius_m"], "r_o": QUOTED["planck_length_m"]},
            tube_length_estimate(QUOTED["electron_radius_m"], rounded),
            "m",
            QUOTED["tube_length_m"],
        ),
    }
