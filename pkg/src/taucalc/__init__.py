"""Exact calculus for tau-quantized global pseudodifferential symbols."""
__version__ = "0.1.0"
