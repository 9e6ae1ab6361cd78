"""Bohmian arrival-time simulator for entangled pairs falling through a
double-double-slit geometry."""

__version__ = "0.1.0"
