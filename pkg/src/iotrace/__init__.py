"""Unified I/O trace toolkit: ingestion, plugin pipeline, analysis and optimization."""

__version__ = "0.1.0"
