"""Numerical checks of commuting principal actions."""
__version__ = "0.1.0"
