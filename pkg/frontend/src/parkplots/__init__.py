"""Render parksim result directories into paper-style figures."""

__version__ = "0.1.0"
