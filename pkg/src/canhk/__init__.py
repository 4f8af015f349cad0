"""Canonical hypercomplex structure on the conjugate tangent bundle of a Kähler manifold."""

__version__ = "0.1.0"
