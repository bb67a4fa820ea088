"""Multiplicative step-size stochastic approximation."""
__version__ = "0.1.0"
