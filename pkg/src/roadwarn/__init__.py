"""Roadside headlight detector and non-habituating deterrent scheduler."""

__version__ = "0.1.0"
