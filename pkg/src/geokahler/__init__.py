"""Numerical engine for Kähler metrics induced by semi-Riemannian 4-manifolds."""

__version__ = "0.1.0"
