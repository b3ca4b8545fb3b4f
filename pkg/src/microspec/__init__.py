"""Iterate-weighted regularity toolkit for constant-coefficient operators."""
__version__ = "0.1.0"
