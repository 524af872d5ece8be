"""Multiclock specification, monitoring and control toolkit."""

__version__ = "0.1.0"
