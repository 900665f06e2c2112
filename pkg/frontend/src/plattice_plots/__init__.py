"""Rendering of BER, noise-decomposition and predictor figures from the
simulator's CSV outputs.

This package talks to the simulator only through its documented CSV
schemas; it never recomputes statistics.
"""

__version__ = "0.1.0"
