"""CONGEST-model simulation and sketch-based small vertex-cut detection."""

__version__ = "0.1.0"
