"""Stabilizing feedback for driftless systems, unicycle closed forms, and
numerical verification of the associated stability claims."""

__version__ = "0.1.0"
