"""Rauzy-Veech renormalization toolkit for interval exchange maps."""

__version__ = "0.1.0"
