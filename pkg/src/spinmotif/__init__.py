"""Shallow-CNN variational ansatz and motif analysis for 1D spin chains."""

__version__ = "0.1.0"
