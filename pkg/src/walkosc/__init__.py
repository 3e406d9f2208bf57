"""Continuous-time quantum walks, coupled harmonic oscillators, and the
direct reductions between them on sparse black-box graphs."""

__version__ = "0.1.0"
