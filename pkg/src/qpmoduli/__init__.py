"""Quasi-Poisson structures on moduli spaces of flat connections over marked surfaces."""

__version__ = "0.1.0"
