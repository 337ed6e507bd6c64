"""Multilevel (base-Q digit) achievability schemes for the K-user symmetric
Gaussian interference channel, with exact deterministic checks, Monte-Carlo
simulation and the generalized-degrees-of-freedom curve."""

__version__ = "0.1.0"
