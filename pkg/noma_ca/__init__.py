"""Comparative-advantage power allocation for two-cell NOMA clusters."""

__version__ = '0.1.0'
