"""Closed-loop active power control for small wind farms, with a desk-scale simulator."""

__version__ = "0.1.0"
