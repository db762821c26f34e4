"""stylo: corpus stylometry toolkit for comparing human and LLM writing."""

__version__ = "0.1.0"
