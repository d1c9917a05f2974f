"""Plot-to-API recommendation with a semantics-guided multi-label network."""

__version__ = "0.1.0"
