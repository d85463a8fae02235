"""Desk-scale curation pipeline and evaluation suite for design-to-code corpora."""

__version__ = "0.1.0"
