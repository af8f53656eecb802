"""Cavity levitation of a tilted dielectric disc."""

__version__ = "0.1.0"
