"""Generalized Tracy-Widom distributions for spiked complex sample covariance matrices."""

__version__ = "0.1.0"
