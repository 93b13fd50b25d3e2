"""Masked-directive humanoid motion controller."""

__version__ = "0.1.0"
