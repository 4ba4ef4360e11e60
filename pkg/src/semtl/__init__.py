"""Semantic transfer learning over EL++ ontologies."""

__version__ = "0.1.0"
