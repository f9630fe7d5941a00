"""Deterministic simulator and analytics for liquid-staking-derivative markets."""

__version__ = "0.1.0"
