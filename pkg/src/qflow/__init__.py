"""Numerical toolkit for singular constant Q-curvature metrics."""

__version__ = "0.1.0"
