"""Mesh-based physics surrogates with multi-node prediction and temporal correction."""

__version__ = "0.1.0"
