"""Numerical laboratory for massless two-component spinors under H = c sigma.p."""

__version__ = "0.1.0"
