"""Robust energy-efficiency simulator for multi-functional RIS-aided MISO downlinks."""

__version__ = "1.0.0"
