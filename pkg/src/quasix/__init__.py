"""Numerical laboratory for isolated excitations of gapped spin chains."""

__version__ = "0.1.0"
