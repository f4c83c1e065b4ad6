"""Two-stage adaptive robust joint unit maintenance and unit commitment."""

__version__ = "0.1.0"
