"""Symbolic and numeric tools for resonant saddles, Dulac maps and polycycles."""

__version__ = "0.1.0"
