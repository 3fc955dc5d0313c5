"""Polynomial chaos synthesis of parameter-dependent LQR gains for LPV systems."""

__version__ = "0.1.0"
