"""Variational quantum-optimization workbench for facility-location problems."""

__version__ = "0.1.0"
