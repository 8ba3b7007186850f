"""Finite parts, regularization and renormalization of divergent half-line integrals."""

__version__ = "0.1.0"
