"""Numerical comparison geometry and derivation transport on CAT(k) spaces."""

__version__ = "0.1.0"
