"""Finite-resource cooling protocols: coherent swaps, incoherent virtual swaps and thermodynamic length."""

__version__ = "0.1.0"
