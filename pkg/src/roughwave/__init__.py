"""Numerical lab for the 1-D stochastic wave equation with rough fractional noise."""

from . import chaos, kernels, noise, norms, params, solver

__all__ = ["chaos", "kernels", "noise", "norms", "params", "solver"]
__version__ = "0.1.0"
