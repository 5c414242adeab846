"""Logarithmic H^1 growth laboratory for the perturbed cubic harmonic oscillator."""

__version__ = "1.0.0"
