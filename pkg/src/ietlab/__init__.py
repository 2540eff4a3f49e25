"""Interval exchange renormalization and weak-mixing experiments."""

__version__ = "0.1.0"
