"""Spectral solver and analysis toolkit for the hydrostatic alpha-model on a periodic strip."""

__version__ = "0.1.0"
