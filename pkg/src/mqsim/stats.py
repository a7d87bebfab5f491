"""Goodness-of-fit machinery used by the verification suites.

Chi-square with right-tail pooling for discrete laws, one-sample KS against
an exponential, total variation between pmfs, and empirical tail curves.
The incomplete gamma and Kolmogorov tails are computed here directly so the
library has no runtime dependency on a stats package.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Iterable, Mapping, Sequence

import numpy as np

from .errors import ParameterError

_GAMMA_MAX_ITER = 500
_GAMMA_EPS = 1e-14
_KOLMOGOROV_MAX_TERMS = 100


def regularized_gamma_q(a: float, x: float) -> float:
    """Upper regularized incomplete gamma Q(a, x) for a > 0, x >= 0."""
    if a <= 0:
        raise ParameterError("shape must be positive")
    if x < 0:
        raise ParameterError("argument must be non-negative")
    if x == 0:
        return 1.0
    if x < a + 1.0:
        return 1.0 - _gamma_p_series(a, x)
    return _gamma_q_contfrac(a, x)


def _gamma_p_series(a: float, x: float) -> float:
    # lower series: P(a,x) = x^a e^-x / Gamma(a) * sum_k x^k / (a (a+1) ... (a+k))
    term = 1.0 / a
    total = term
    denom = a
    for _ in range(_GAMMA_MAX_ITER):
        denom += 1.0
        term *= x / denom
        total += term
        if abs(term) < abs(total) * _GAMMA_EPS:
            break
    log_p = a * math.log(x) - x - math.lgamma(a) + math.log(total)
    return math.exp(log_p)


def _gamma_q_contfrac(a: float, x: float) -> float:
    # Lentz's method on the standard continued fraction for Q(a, x)
    tiny = 1e-300
    b = x + 1.0 - a
    c = 1.0 / tiny
    d = 1.0 / b
    h = d
    for i in range(1, _GAMMA_MAX_ITER + 1):
        an = -i * (i - a)
        b += 2.0
        d = an * d + b
        if abs(d) < tiny:
            d = tiny
        c = b + an / c
        if abs(c) < tiny:
            c = tiny
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < _GAMMA_EPS:
            break
    log_q = a * math.log(x) - x - math.lgamma(a) + math.log(h)
    return math.exp(log_q)


def chi_square_p_value(statistic: float, df: int) -> float:
    if df < 1:
        raise ParameterError("df must be positive")
    if statistic < 0:
        raise ParameterError("statistic must be non-negative")
    return regularized_gamma_q(df / 2.0, statistic / 2.0)


def kolmogorov_p_value(d: float, n: int) -> float:
    """Two-sided p for a one-sample KS statistic d at sample size n."""
    if n < 1:
        raise ParameterError("need at least one sample")
    if d <= 0:
        return 1.0
    lam = (math.sqrt(n) + 0.12 + 0.11 / math.sqrt(n)) * d
    if lam < 0.05:
        return 1.0
    total = 0.0
    sign = 1.0
    for j in range(1, _KOLMOGOROV_MAX_TERMS + 1):
        term = sign * math.exp(-2.0 * j * j * lam * lam)
        total += term
        if abs(term) < 1e-12:
            break
        sign = -sign
    return min(1.0, max(0.0, 2.0 * total))


@dataclass(frozen=True)
class GofReport:
    statistic: float
    df: int
    p_value: float
    bins: int
    samples: int


def chi_square_gof(
    observed: Mapping[int, int],
    pmf: Callable[[int], float],
    support: Iterable[int],
    *,
    min_expected: float = 5.0,
) -> GofReport:
    """Chi-square test of observed integer counts against a discrete pmf.

    `support` enumerates the head of the law in order; all pmf mass beyond
    it, and all observed keys beyond it, pool into the final cell.  Cells
    are then merged rightward until every expected count reaches
    min_expected.
    """
    keys = list(support)
    if len(keys) < 2:
        raise ParameterError("support must contain at least two points")
    if any(b <= a for a, b in zip(keys, keys[1:])):
        raise ParameterError("support must be strictly increasing")
    n = sum(observed.values())
    if n <= 0:
        raise ParameterError("observed counts are empty")
    if any(k < keys[0] for k in observed):
        raise ParameterError("observed key below the support")

    probs = [pmf(k) for k in keys]
    if any(p < 0 for p in probs):
        raise ParameterError("pmf returned a negative value")
    head = sum(probs)
    if head > 1.0 + 1e-9:
        raise ParameterError("pmf mass on the support exceeds 1")
    key_set = set(keys)
    obs = [float(observed.get(k, 0)) for k in keys]
    obs[-1] += sum(v for k, v in observed.items() if k not in key_set and k > keys[-1])
    exp = [n * p for p in probs]
    exp[-1] += n * max(0.0, 1.0 - head)
    # keys strictly between support points would be silently dropped
    between = sum(
        v for k, v in observed.items() if k not in key_set and keys[0] <= k <= keys[-1]
    )
    if between:
        raise ParameterError("observed key falls between support points")

    merged: list[tuple[float, float]] = []
    acc_o = acc_e = 0.0
    for o, e in zip(obs, exp):
        acc_o += o
        acc_e += e
        if acc_e >= min_expected:
            merged.append((acc_o, acc_e))
            acc_o = acc_e = 0.0
    if acc_e > 0 or acc_o > 0:
        if merged:
            last_o, last_e = merged.pop()
            merged.append((last_o + acc_o, last_e + acc_e))
        else:
            merged.append((acc_o, acc_e))
    if len(merged) < 2:
        raise ParameterError("too few cells after pooling; widen the support")

    stat = sum((o - e) ** 2 / e for o, e in merged)
    df = len(merged) - 1
    return GofReport(
        statistic=stat, df=df, p_value=chi_square_p_value(stat, df), bins=len(merged), samples=n
    )


def chi_square_homogeneity(
    counts_a: Mapping[int, int],
    counts_b: Mapping[int, int],
    *,
    min_expected: float = 5.0,
) -> GofReport:
    """Two-sample chi-square: do both count tables come from one law?"""
    keys = sorted(set(counts_a) | set(counts_b))
    if not keys:
        raise ParameterError("both count tables are empty")
    a = [float(counts_a.get(k, 0)) for k in keys]
    b = [float(counts_b.get(k, 0)) for k in keys]
    na, nb = sum(a), sum(b)
    if na <= 0 or nb <= 0:
        raise ParameterError("each table needs at least one observation")
    n = na + nb
    cells: list[tuple[float, float]] = []
    acc_a = acc_b = 0.0
    for oa, ob in zip(a, b):
        acc_a += oa
        acc_b += ob
        col = acc_a + acc_b
        if col * na / n >= min_expected and col * nb / n >= min_expected:
            cells.append((acc_a, acc_b))
            acc_a = acc_b = 0.0
    if acc_a > 0 or acc_b > 0:
        if cells:
            la, lb = cells.pop()
            cells.append((la + acc_a, lb + acc_b))
        else:
            cells.append((acc_a, acc_b))
    if len(cells) < 2:
        raise ParameterError("too few cells after pooling")
    stat = 0.0
    for oa, ob in cells:
        col = oa + ob
        ea = col * na / n
        eb = col * nb / n
        stat += (oa - ea) ** 2 / ea + (ob - eb) ** 2 / eb
    df = len(cells) - 1
    return GofReport(
        statistic=stat,
        df=df,
        p_value=chi_square_p_value(stat, df),
        bins=len(cells),
        samples=int(n),
    )


@dataclass(frozen=True)
class KsReport:
    statistic: float
    p_value: float
    samples: int


def ks_test_exponential(samples: Sequence[float] | np.ndarray, rate: float) -> KsReport:
    """One-sample KS of the data against Exp(rate)."""
    if rate <= 0:
        raise ParameterError("rate must be positive")
    x = np.sort(np.asarray(samples, dtype=float))
    n = x.size
    if n < 1:
        raise ParameterError("need at least one sample")
    if x[0] < 0:
        raise ParameterError("exponential samples must be non-negative")
    cdf = -np.expm1(-rate * x)
    i = np.arange(1, n + 1)
    d_plus = np.max(i / n - cdf)
    d_minus = np.max(cdf - (i - 1) / n)
    d = float(max(d_plus, d_minus))
    return KsReport(statistic=d, p_value=kolmogorov_p_value(d, n), samples=n)


def tv_distance(p: Mapping[int, float], q: Mapping[int, float]) -> float:
    """Total variation distance between two pmfs over their key union."""
    keys = set(p) | set(q)
    return 0.5 * sum(abs(p.get(k, 0.0) - q.get(k, 0.0)) for k in keys)


def counts_to_pmf(counts: Mapping[int, int]) -> dict[int, float]:
    total = sum(counts.values())
    if total <= 0:
        raise ParameterError("counts are empty")
    return {k: v / total for k, v in counts.items()}


def tail_curve(
    samples: Sequence[float] | np.ndarray, mu: float, ks: Sequence[float]
) -> list[tuple[float, float]]:
    """Empirical exceedance P[X >= k * mu] at each multiplier k."""
    if mu <= 0:
        raise ParameterError("mu must be positive")
    x = np.asarray(samples, dtype=float)
    if x.size == 0:
        raise ParameterError("need at least one sample")
    return [(float(k), float(np.mean(x >= k * mu))) for k in ks]
