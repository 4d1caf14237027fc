"""Exact Reidemeister traces for coincidences of maps between flat manifolds."""

__version__ = "0.1.0"
