"""Finite difference simulation of volatility modulated Volterra processes."""

__version__ = "0.1.0"
