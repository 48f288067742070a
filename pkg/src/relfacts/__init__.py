"""Exact simulation of the extended Wigner's friend GHZ scenario."""

__version__ = "0.1.0"
