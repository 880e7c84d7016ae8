"""SINR simulations of broadcast, MIS and backbone protocols without carrier sensing."""

__version__ = "0.1.0"
