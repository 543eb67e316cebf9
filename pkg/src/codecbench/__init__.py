"""Codec comparison and rate-quality optimisation harness."""

__version__ = "0.1.0"
