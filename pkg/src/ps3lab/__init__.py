"""Spectral laboratory for degree-three Poincare-Steklov integral equations."""

__version__ = "0.1.0"
