"""Deterministic random primitives shared by the simulators.

Every draw reduces to uniform doubles from a counter-based Philox stream,
so a run is reproducible from its seed alone and child streams derived
from string labels are mutually independent.
"""

from __future__ import annotations

import bisect
import hashlib
import math
from enum import Enum
from typing import Sequence

import numpy as np

from .errors import ParameterError

# Served in blocks to amortize the per-call cost of scalar draws.
_BUF_SIZE = 8192

# Above this success probability the inverse CDF divides by a log that is
# dominated by rounding error; explicit Bernoulli trials are exact there.
_GEOM_DIRECT_LIMIT = 0.999

_WEIGHT_SUM_TOL = 1e-12


class GeomConvention(Enum):
    """Which count a geometric draw reports."""

    FAILURES = "failures-before-success"
    TRIALS = "trials-including-success"


class RandomSource:
    """Splittable deterministic uniform stream.

    `split(label)` derives an independent child stream addressed by
    (seed, label path); `clone()` copies the exact forward stream, which is
    what coupled-draw tests rely on.
    """

    def __init__(self, seed: int, _spawn_key: tuple[int, ...] = ()) -> None:
        if not isinstance(seed, int) or seed < 0:
            raise ParameterError("seed must be a non-negative integer")
        self.seed = seed
        self.spawn_key = _spawn_key
        self._gen = np.random.Generator(
            np.random.Philox(np.random.SeedSequence(seed, spawn_key=_spawn_key))
        )
        self._buf: np.ndarray = np.empty(0)
        self._pos = 0

    def split(self, label: str) -> "RandomSource":
        """Independent child stream addressed by this stream's seed and `label`."""
        digest = hashlib.sha256(label.encode("utf-8")).digest()
        words = tuple(int.from_bytes(digest[i : i + 4], "little") for i in (0, 4, 8, 12))
        return RandomSource(self.seed, self.spawn_key + words)

    def clone(self) -> "RandomSource":
        """Copy that will produce the identical sequence of draws."""
        other = RandomSource(self.seed, self.spawn_key)
        other._gen.bit_generator.state = self._gen.bit_generator.state
        other._buf = self._buf.copy()
        other._pos = self._pos
        return other

    def random(self) -> float:
        """Uniform draw from [0, 1)."""
        if self._pos >= self._buf.size:
            self._buf = self._gen.random(_BUF_SIZE)
            self._pos = 0
        u = self._buf[self._pos]
        self._pos += 1
        return float(u)

    def random_array(self, size: int) -> np.ndarray:
        """Uniform draws from [0, 1); deterministic given the call sequence."""
        if size < 0:
            raise ParameterError("size must be non-negative")
        return self._gen.random(size)

    def randbelow(self, n: int) -> int:
        """Uniform integer from range(n).  Bias is O(n / 2**53), negligible here."""
        if n <= 0:
            raise ParameterError("n must be positive")
        k = int(self.random() * n)
        return k if k < n else n - 1

    def randbelow_array(self, n: int, size: int) -> np.ndarray:
        """Vector of uniform integers from range(n)."""
        if n <= 0:
            raise ParameterError("n must be positive")
        k = (self.random_array(size) * n).astype(np.int64)
        np.clip(k, 0, n - 1, out=k)
        return k


def exp_sample(rate: float, rng: RandomSource) -> float:
    """Exponential draw with the given rate, by inverse CDF."""
    if not rate > 0:
        raise ParameterError("rate must be positive")
    u = rng.random()
    while u == 0.0:
        u = rng.random()
    return -math.log1p(-u) / rate


def exp_array(rate: float, size: int, rng: RandomSource) -> np.ndarray:
    """Vector of exponential draws, same construction as exp_sample."""
    if not rate > 0:
        raise ParameterError("rate must be positive")
    u = rng.random_array(size)
    while True:
        zero = u == 0.0
        if not zero.any():
            break
        u[zero] = rng.random_array(int(zero.sum()))
    return -np.log1p(-u) / rate


def _geom_failures(p: float, rng: RandomSource) -> int:
    if p > _GEOM_DIRECT_LIMIT:
        k = 0
        while rng.random() >= p:
            k += 1
        return k
    u = rng.random()
    while u == 0.0:
        u = rng.random()
    return int(math.log(u) / math.log1p(-p))


def geom_sample(p: float, convention: GeomConvention, rng: RandomSource) -> int:
    """Geometric draw under the stated counting convention.

    FAILURES counts failures before the first success (support 0, 1, ...);
    TRIALS counts trials including the success (support 1, 2, ...).  Both
    conventions consume the same draws, so coupled calls differ by exactly 1.
    """
    if not 0.0 < p <= 1.0:
        raise ParameterError("p must lie in (0, 1]")
    failures = _geom_failures(p, rng)
    return failures if convention is GeomConvention.FAILURES else failures + 1


def geom_array(
    p: float, convention: GeomConvention, size: int, rng: RandomSource
) -> np.ndarray:
    """Vector of geometric draws, same construction as geom_sample."""
    if not 0.0 < p <= 1.0:
        raise ParameterError("p must lie in (0, 1]")
    if p > _GEOM_DIRECT_LIMIT:
        out = np.zeros(size, dtype=np.int64)
        active = rng.random_array(size) >= p
        while active.any():
            out[active] += 1
            idx = np.flatnonzero(active)
            active[idx] = rng.random_array(idx.size) >= p
        failures = out
    else:
        u = rng.random_array(size)
        while True:
            zero = u == 0.0
            if not zero.any():
                break
            u[zero] = rng.random_array(int(zero.sum()))
        failures = (np.log(u) / math.log1p(-p)).astype(np.int64)
    if convention is GeomConvention.FAILURES:
        return failures
    return failures + 1


def categorical_sample(weights: Sequence[float], rng: RandomSource) -> int:
    """Index draw proportional to `weights`, which must sum to 1."""
    prefix = validate_weights(weights)
    return sample_from_prefix(prefix, rng)


def validate_weights(weights: Sequence[float]) -> list[float]:
    """Check a probability vector and return its prefix sums (last pinned to 1)."""
    if len(weights) == 0:
        raise ParameterError("weights must be non-empty")
    total = 0.0
    prefix = []
    for w in weights:
        if w < 0.0:
            raise ParameterError("weights must be non-negative")
        total += w
        prefix.append(total)
    if abs(total - 1.0) > _WEIGHT_SUM_TOL:
        raise ParameterError(f"weights sum to {total!r}, expected 1 within {_WEIGHT_SUM_TOL}")
    prefix[-1] = 1.0
    return prefix


def sample_from_prefix(prefix: Sequence[float], rng: RandomSource) -> int:
    """Inverse-CDF draw against precomputed prefix sums (last entry must be 1)."""
    k = bisect.bisect_right(prefix, rng.random())
    return k if k < len(prefix) else len(prefix) - 1
