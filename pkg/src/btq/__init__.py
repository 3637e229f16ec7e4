"""Fundamental domains of quaternionic groups acting on Bruhat-Tits trees."""

__version__ = "0.1.0"
