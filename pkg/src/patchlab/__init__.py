"""Contour dynamics of vortex patches and singular-integral verification tools."""

__version__ = "0.1.0"
