"""Ensemble deterministic policy gradients with desk-scale environments and stability metrics."""

__version__ = "0.1.0"
