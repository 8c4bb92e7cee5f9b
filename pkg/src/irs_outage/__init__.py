"""Outage-constrained robust secure beamforming with an intelligent reflecting surface."""

__version__ = "0.1.0"
