"""Crowd navigation with a GRU crowd encoder feeding a Mamba value network."""

__version__ = "0.1.0"
