"""Numerical toolkit for time-frequency localization of pseudodifferential operators."""

__version__ = "0.1.0"
