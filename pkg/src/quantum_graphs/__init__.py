"""Thermodynamics of quantum graph states: exact enumeration, Monte Carlo and analysis."""

__version__ = "0.1.0"
