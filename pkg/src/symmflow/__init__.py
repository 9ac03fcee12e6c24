"""Exact and approximate symmetries, integrating factors and perturbation
series for scalar ODEs with a small parameter."""

__version__ = "0.1.0"
