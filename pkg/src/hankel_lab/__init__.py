"""Numerical laboratory for radial Fourier multipliers and Fourier-Bessel transforms."""

__version__ = "0.1.0"

SCHEMA = "hankel-mult-lab/1"
