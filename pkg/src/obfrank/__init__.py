"""Achievable transmission ranks for opportunistic beamforming under per-beam outage constraints."""

__version__ = "0.1.0"
