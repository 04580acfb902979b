"""Compressed-sensing reconstruction of variational-circuit cost landscapes."""

__version__ = "0.1.0"
