"""Contributor influence and co-voting analysis for DAO governance data."""

__version__ = "0.1.0"
