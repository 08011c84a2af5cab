"""Compact joint subspaces for unsupervised cross-domain recognition."""

__version__ = "0.1.0"
