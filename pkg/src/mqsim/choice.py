"""Rank distributions for queue selection.

A deletion scheme is a probability vector sigma over the rank of the queue
minimum it removes: sigma[i] is the chance of taking the (i+1)-th smallest
of the n current minima.  The central family is best-of-c: sample floor(c)
queues uniformly with replacement, plus one more with probability
c - floor(c), and take the best minimum among them.  Its prefix
probabilities have the closed form

    sigma_upto[i] = 1 - (1 - x)^floor(c) * (1 - (c - floor(c)) * x),
    x = (i + 1) / n.

Prefix sums are authoritative for sampling; sigma itself is derived by
differencing and kept for display.  Exact rational prefixes are kept
alongside the floats so the strict drift check cannot be decided by float
rounding.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

import numpy as np

from .errors import ParameterError
from .sampling import RandomSource, sample_from_prefix, validate_weights


@dataclass(frozen=True)
class CParameter:
    """Fractional sample count: `whole` queues, one extra with probability `frac`."""

    value: float
    whole: int
    frac: float

    @classmethod
    def of(cls, c: "float | CParameter") -> "CParameter":
        if isinstance(c, CParameter):
            return c
        if not math.isfinite(c) or c <= 1.0:
            raise ParameterError("c must be a finite real > 1")
        whole = math.floor(c)
        return cls(value=float(c), whole=whole, frac=float(c) - whole)


@dataclass(frozen=True)
class ChoiceDistribution:
    """Rank distribution over n queues with float and exact-rational prefixes."""

    n: int
    sigma: tuple[float, ...]
    sigma_upto: tuple[float, ...]
    sigma_upto_exact: tuple[Fraction, ...]
    label: str

    def __post_init__(self) -> None:
        if self.n < 1 or len(self.sigma) != self.n or len(self.sigma_upto) != self.n:
            raise ParameterError("sigma and sigma_upto must both have length n >= 1")


def from_weights(weights: Sequence[float], label: str = "custom") -> ChoiceDistribution:
    """Distribution from explicit rank weights (must sum to 1 within 1e-12)."""
    prefix = validate_weights(weights)
    exact: list[Fraction] = []
    total = Fraction(0)
    for w in weights:
        total += Fraction(w) if not isinstance(w, Fraction) else w
        exact.append(total)
    return ChoiceDistribution(
        n=len(weights),
        sigma=tuple(float(w) for w in weights),
        sigma_upto=tuple(prefix),
        sigma_upto_exact=tuple(exact),
        label=label,
    )


def uniform_choice(n: int) -> ChoiceDistribution:
    """Rank-uniform selection; sits exactly on the drift boundary, never above it."""
    if n < 1:
        raise ParameterError("n must be positive")
    w = Fraction(1, n)
    return from_weights([w] * n, label=f"uniform({n})")


def best_of_c(c: "float | CParameter", n: int) -> ChoiceDistribution:
    """Best-of-c selection over n queues."""
    par = CParameter.of(c)
    if n < 1:
        raise ParameterError("n must be positive")
    upto = []
    for i in range(1, n + 1):
        x = i / n
        upto.append(1.0 - (1.0 - x) ** par.whole * (1.0 - par.frac * x))
    upto[-1] = 1.0
    sigma = tuple(
        upto[0] if i == 0 else upto[i] - upto[i - 1] for i in range(n)
    )
    frac_exact = Fraction(par.value) - par.whole
    exact = tuple(
        1 - (1 - Fraction(i, n)) ** par.whole * (1 - frac_exact * Fraction(i, n))
        for i in range(1, n + 1)
    )
    return ChoiceDistribution(
        n=n,
        sigma=sigma,
        sigma_upto=tuple(upto),
        sigma_upto_exact=exact,
        label=f"best-of-{par.value:g}",
    )


def satisfies_star(dist: ChoiceDistribution) -> bool:
    """Strict drift condition: sigma_upto[i] > (i + 1) / n for every i < n - 1.

    Decided on the exact rational prefixes, so a boundary case (e.g. the
    uniform distribution) can never pass through float fuzz.
    """
    return first_star_violation(dist) is None


def first_star_violation(dist: ChoiceDistribution) -> int | None:
    """First 0-based prefix index violating the strict drift condition, if any."""
    n = dist.n
    for i in range(n - 1):
        if dist.sigma_upto_exact[i] <= Fraction(i + 1, n):
            return i
    return None


def sample_index(dist: ChoiceDistribution, rng: RandomSource) -> int:
    """Draw a 0-based rank index from the distribution."""
    return sample_from_prefix(dist.sigma_upto, rng)


def sample_index_many(dist: ChoiceDistribution, size: int, rng: RandomSource) -> np.ndarray:
    """Vector of 0-based rank draws via searchsorted on the prefix sums."""
    upto = np.asarray(dist.sigma_upto)
    idx = np.searchsorted(upto, rng.random_array(size), side="right")
    return np.minimum(idx, dist.n - 1)


def sample_count(c: "float | CParameter", rng: RandomSource) -> int:
    """How many queues one best-of-c deletion inspects: floor(c), +1 w.p. frac."""
    par = CParameter.of(c)
    extra = 1 if (par.frac > 0.0 and rng.random() < par.frac) else 0
    return par.whole + extra


def sample_index_explicit(
    minima: Sequence[float], c: "float | CParameter", rng: RandomSource
) -> int:
    """Best-of-c by actually comparing minima: sample positions, return the argmin.

    Ties break toward the lower position, which is what a multi-queue with
    distinct keys produces.
    """
    n = len(minima)
    if n < 1:
        raise ParameterError("minima must be non-empty")
    k = sample_count(c, rng)
    best = rng.randbelow(n)
    for _ in range(k - 1):
        j = rng.randbelow(n)
        if minima[j] < minima[best] or (minima[j] == minima[best] and j < best):
            best = j
    return best


def sample_index_explicit_many(
    c: "float | CParameter", n: int, size: int, rng: RandomSource
) -> np.ndarray:
    """Vectorized explicit best-of-c over ascending distinct minima.

    With ascending minima the argmin is the smallest sampled position, so the
    draw reduces to a minimum over position columns.  Used for bulk
    distributional comparisons against sample_index.
    """
    par = CParameter.of(c)
    if n < 1:
        raise ParameterError("n must be positive")
    cols = [rng.randbelow_array(n, size) for _ in range(par.whole)]
    out = cols[0].copy()
    for col in cols[1:]:
        np.minimum(out, col, out=out)
    if par.frac > 0.0:
        extra = rng.random_array(size) < par.frac
        col = rng.randbelow_array(n, size)
        out = np.where(extra, np.minimum(out, col), out)
    return out
