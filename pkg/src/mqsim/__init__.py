"""Relaxed multi-queue priority scheduling: simulators and exact analysis.

A deletion from n priority queues inspects a few queue minima and removes
the best one it saw, so the removed element is usually not the global
minimum.  This package models the rank of the removed element exactly
(product-geometric and product-exponential stationary laws), simulates the
underlying processes, and verifies the two against each other.
"""

from __future__ import annotations

__version__ = "0.1.0"

from .errors import DivergenceError, ParameterError, QueueDrainedError, StateSpaceError

__all__ = [
    "DivergenceError",
    "ParameterError",
    "QueueDrainedError",
    "StateSpaceError",
    "__version__",
]
