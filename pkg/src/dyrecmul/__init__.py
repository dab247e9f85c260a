"""Bit-exact emulation and error analysis of a LUT-reconfigurable INT8 approximate multiplier."""

__version__ = "0.1.0"
