"""Desk-scale hybrid-electric-vehicle energy-management laboratory."""

__version__ = "0.1.0"
