"""Typed textual pattern mining and attribute extraction."""

__version__ = "0.1.0"
