"""Holistic communication-corpus analysis: composable filter levels,
conversational-dynamics episodes, concept proximity queries, relevance
feedback, provenance, and a matrix visualization backend."""

__version__ = "0.1.0"
