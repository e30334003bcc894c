"""Uniform-margin transforms, zero-pattern compatibility and odds-ratio analysis
for multi-way contingency tables."""

__version__ = "0.1.0"
