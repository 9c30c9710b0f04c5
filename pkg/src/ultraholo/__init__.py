"""Numerical toolkit for weight sequences, weight functions, Legendre conjugates and flat kernels."""

__version__ = "0.1.0"
