"""Compact approximate Taylor schemes for 1D and 2D balance laws."""

__version__ = "0.1.0"
