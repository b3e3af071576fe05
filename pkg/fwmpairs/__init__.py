"""Photon-pair generation by four-wave mixing in microstructure fiber."""

__version__ = "0.1.0"
