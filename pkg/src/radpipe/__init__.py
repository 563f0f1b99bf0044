"""Batch toolkit for French clinical report pseudonymization and embedding evaluation."""

__version__ = "0.1.0"
