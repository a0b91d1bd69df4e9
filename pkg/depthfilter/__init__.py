"""Depth-function based filters for cell-wise and case-wise outliers."""

__version__ = "0.3.0"
