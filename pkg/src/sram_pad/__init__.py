"""Hybrid cell assignment and PAD optimization for SRAM rows."""
__version__ = "0.1.0"
