"""Discrete-event simulator of duty-cycled urban parking sensor networks."""

__version__ = "0.1.0"
