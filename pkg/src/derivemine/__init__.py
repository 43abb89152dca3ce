"""Derivation mining pipeline: corpus filter, extraction, agent chain, curation, eval."""

__version__ = "0.1.0"
