"""Desk-scale autonomous driving stack with a validator-driven simulator."""

__version__ = "0.1.0"
