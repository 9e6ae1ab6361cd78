"""Batch renderer for ddslit CSV artifacts."""

__version__ = "0.1.0"
