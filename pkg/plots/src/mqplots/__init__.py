"""Figures from mq CSV artifacts; no quantity is recomputed here."""

__version__ = "0.1.0"
