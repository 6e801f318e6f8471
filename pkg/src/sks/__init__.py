"""Proof kernel and transformation toolkit for classical logic in the
calculus of structures."""

__version__ = "0.1.0"
