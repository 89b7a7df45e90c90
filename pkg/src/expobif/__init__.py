"""Combinatorics and numerics of the exponential family E(z) = exp(z) + kappa."""

__version__ = "0.1.0"
