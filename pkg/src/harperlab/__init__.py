"""Spectral numerics for quasiperiodic Jacobi operators: the almost Mathieu family and its chiral gauge partner."""

__version__ = "0.1.0"
