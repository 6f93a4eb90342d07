"""Simulator for a multi-user QKD network built on Bell pairs and dense coding."""
__version__ = "0.1.0"
