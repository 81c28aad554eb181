"""Exact construction and numerical analysis of multi-lump rational waves indexed by partitions."""

__version__ = "0.1.0"
