"""Typed agent calculus: terms, types, evaluation, config compilation and lint."""

__version__ = "0.1.0"
