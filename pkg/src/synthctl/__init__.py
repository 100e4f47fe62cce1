"""Robust synthetic control and synthetic interventions for panel time series."""

__version__ = "0.1.0"
