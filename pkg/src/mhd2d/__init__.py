"""Lagrangian simulator and identity verifier for 2D plasma-vacuum MHD."""

__version__ = "0.1.0"
