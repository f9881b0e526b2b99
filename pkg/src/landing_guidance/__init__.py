"""Terrain-avoiding ZEM/ZEV landing guidance with a multiple-sliding-surface robustifier."""
__version__ = "0.1.0"
