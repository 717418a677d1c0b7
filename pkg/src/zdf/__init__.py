"""Zigzag-decodable fountain codes with scheduled bit-wise peeling."""

__version__ = "0.1.0"
