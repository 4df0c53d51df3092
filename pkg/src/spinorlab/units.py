"""Minimal SI dimension tags for formula checking.

Formulas are written as plain arithmetic so they can be evaluated twice:
once with floats for the number, and once (at import time) with ``Dim``
objects to prove the result has the declared dimension. A formula whose
dimensions do not work out fails when its module is imported.
"""

from __future__ import annotations

import functools
import inspect
from dataclasses import dataclass
from fractions import Fraction
from numbers import Real

_BASE = ("kg", "m", "s", "A")


@dataclass(frozen=True)
class Dim:
    exponents: tuple[Fraction, Fraction, Fraction, Fraction]

    @classmethod
    def of(cls, kg=0, m=0, s=0, A=0) -> "Dim":
        return cls(tuple(Fraction(x) for x in (kg, m, s, A)))

    def __mul__(self, other):
        if isinstance(other, Real):
            return self
        return Dim(tuple(a + b for a, b in zip(self.exponents, other.exponents)))

    __rmul__ = __mul__

    def __truediv__(self, other):
        if isinstance(other, Real):
            return self
        return Dim(tuple(a - b for a, b in zip(self.exponents, other.exponents)))

    def __rtruediv__(self, other):
        if not isinstance(other, Real):
            return NotImplemented
        return Dim(tuple(-a for a in self.exponents))

    def __pow__(self, power):
        return Dim(tuple(a * Fraction(power).limit_denominator(1000) for a in self.exponents))

    def __add__(self, other):
        if isinstance(other, Dim) and other != self:
            raise TypeError(f"cannot add {self} and {other}")
        return self

    __radd__ = __add__
    __sub__ = __add__
    __rsub__ = __add__

    def __str__(self) -> str:
        parts = [f"{b}^{e}" if e != 1 else b for b, e in zip(_BASE, self.exponents) if e != 0]
        return " ".join(parts) or "1"


DIMENSIONLESS = Dim.of()
MASS = Dim.of(kg=1)
LENGTH = Dim.of(m=1)
TIME = Dim.of(s=1)
CHARGE = Dim.of(A=1, s=1)
VELOCITY = LENGTH / TIME
MOMENTUM = MASS * VELOCITY
ENERGY = MOMENTUM * VELOCITY
ACTION = ENERGY * TIME
WAVENUMBER = 1 / LENGTH
GRAVITATION = LENGTH**3 / (MASS * TIME**2)
PERMITTIVITY = CHARGE**2 / (ENERGY * LENGTH)
ENERGY_SQUARED = ENERGY**2


class DimensionError(TypeError):
    pass


def formula(returns: Dim, **arg_dims: Dim):
    """Check at decoration time that ``func(**arg_dims)`` has dimension ``returns``."""

    def wrap(func):
        params = list(inspect.signature(func).parameters)
        missing = set(params) - set(arg_dims)
        if missing:
            raise DimensionError(f"{func.__name__}: no dimension declared for {sorted(missing)}")
        got = func(**{name: arg_dims[name] for name in params})
        if isinstance(got, Real):
            got = DIMENSIONLESS
        if got != returns:
            raise DimensionError(f"{func.__name__} yields [{got}], declared [{returns}]")

        @functools.wraps(func)
        def inner(*args, **kwargs):
            return func(*args, **kwargs)

        inner.dimension = returns
        return inner

    return wrap
