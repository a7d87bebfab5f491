"""Closed-form expectations for rank-biased deletion schemes.

Conventions (1-based rank i over n queues, s_i = sigma_upto[i - 1]):

  * gap i is geometric with success probability p_i = 1 - i / (n * s_i),
    counting failures before success;
  * the exponential-jump gap i has rate lambda_i = n * s_i - i;
  * expected rank of the i-th smallest minimum: r_i = 1 + sum_{j<i} 1/p_j;
  * expected deletion rank error: sum_i s_i (1 - s_i) / (s_i - i/n).

All of these require the strict drift condition s_i > i/n.  The best-of-c
specializations (closed forms for c = 2 and 1 < c < 2, integral and crude
bounds for general c, tail bound, logistic position profile) live here too.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

from .choice import ChoiceDistribution, CParameter, best_of_c, first_star_violation
from .errors import ParameterError, DivergenceError

_SIMPSON_TOL = 1e-10
_SIMPSON_MAX_DEPTH = 50


@dataclass(frozen=True)
class StationaryParams:
    """Per-gap geometric success probabilities and exponential rates."""

    n: int
    sigma_upto: tuple[float, ...]
    p: tuple[float, ...]
    lam: tuple[float, ...]


@dataclass(frozen=True)
class RankErrorBounds:
    """Integral sandwich for E[rank error], plus cruder closed bounds for c >= 2."""

    integral_lower: float
    integral_upper: float
    crude_lower: float | None
    crude_upper: float | None

    @property
    def lower(self) -> float:
        if self.crude_lower is None:
            return self.integral_lower
        return max(self.integral_lower, self.crude_lower)

    @property
    def upper(self) -> float:
        if self.crude_upper is None:
            return self.integral_upper
        return min(self.integral_upper, self.crude_upper)


@dataclass(frozen=True)
class Concentration:
    """Mean bound parameters for the worst rank r_n - 1 at c = 2."""

    mu: float
    p_star: float


@dataclass(frozen=True)
class RankErrorSummary:
    """Everything the CLI reports about E[rank error] for one (c, n)."""

    c: float
    n: int
    exact: float
    closed_form: float | None
    integral: float
    bounds: RankErrorBounds


def _require_star(dist: ChoiceDistribution) -> None:
    i = first_star_violation(dist)
    if i is not None:
        raise DivergenceError(
            f"sigma_upto[{i}] <= {(i + 1)}/{dist.n}: no stationary regime",
            gap_index=i,
        )


def stationary_params(dist: ChoiceDistribution) -> StationaryParams:
    """Geometric/exponential gap parameters; requires the strict drift condition."""
    _require_star(dist)
    n = dist.n
    p = []
    lam = []
    for i in range(1, n):
        s = dist.sigma_upto[i - 1]
        p.append(1.0 - i / (n * s))
        lam.append(n * s - i)
    return StationaryParams(n=n, sigma_upto=dist.sigma_upto, p=tuple(p), lam=tuple(lam))


def expected_ranks(params: StationaryParams) -> tuple[float, ...]:
    """Long-run expected rank of each queue minimum, smallest first."""
    ranks = [1.0]
    for p in params.p:
        ranks.append(ranks[-1] + 1.0 / p)
    return tuple(ranks)


def initial_expected_ranks(n: int) -> tuple[float, ...]:
    """Expected minima ranks right after a uniform random partition of 1..M.

    Scanning keys upward, each new queue appears after a geometric wait, so
    the profile is the coupon-collector one: r_i = sum_{j<i} n / (n - j).
    """
    if n < 1:
        raise ParameterError("n must be positive")
    ranks = []
    acc = 0.0
    for j in range(n):
        acc += n / (n - j)
        ranks.append(acc)
    return tuple(ranks)


def expected_rank_error(dist: ChoiceDistribution) -> float:
    """Exact long-run E[rank error] = sum_i s_i (1 - s_i) / (s_i - i/n)."""
    _require_star(dist)
    n = dist.n
    total = 0.0
    for i in range(1, n):
        s = dist.sigma_upto[i - 1]
        total += s * (1.0 - s) / (s - i / n)
    return total


def rank_error_c2_closed(n: int) -> float:
    """E[rank error] for best-of-2: (5/6) n - 1 + 1/(6n)."""
    if n < 1:
        raise ParameterError("n must be positive")
    return (5.0 / 6.0) * n - 1.0 + 1.0 / (6.0 * n)


def rank_error_c1eps_closed(eps: float, n: int) -> float:
    """E[rank error] for best-of-(1+eps), 0 < eps < 1."""
    if not 0.0 < eps < 1.0:
        raise ParameterError("eps must lie strictly between 0 and 1")
    if n < 1:
        raise ParameterError("n must be positive")
    return (1.0 / eps - eps / 6.0) * n - 1.0 / eps + eps / (6.0 * n)


def f_c(c: "float | CParameter", x: float) -> float:
    """Normalized rank-error integrand on [0, 1].

    With w = floor(c), e = c - w, a = 1 - e + e*x and S = sum_{j<w-1} x^j:

        f_c(x) = x^(w-1) * a * (1 + a * x^(w-1) / (S + e * x^(w-1)))

    which is finite on the whole interval, equals (1-e)/e at x = 0 when
    w = 1, equals 0 at x = 0 when w >= 2, and equals c/(c-1) at x = 1.
    """
    par = CParameter.of(c)
    if x < 0.0 or x > 1.0:
        raise ParameterError("x must lie in [0, 1]")
    w, e = par.whole, par.frac
    xw = x ** (w - 1)
    a = 1.0 - e + e * x
    s = sum(x**j for j in range(w - 1))
    return xw * a * (1.0 + a * xw / (s + e * xw))


def _adaptive_simpson(
    f: Callable[[float], float], a: float, b: float, tol: float, max_depth: int
) -> float:
    """Adaptive Simpson quadrature with the standard error/15 refinement rule."""

    def simpson(lo: float, hi: float, flo: float, fmid: float, fhi: float) -> float:
        return (hi - lo) / 6.0 * (flo + 4.0 * fmid + fhi)

    def recurse(
        lo: float,
        hi: float,
        flo: float,
        fmid: float,
        fhi: float,
        whole: float,
        eps: float,
        depth: int,
    ) -> float:
        mid = 0.5 * (lo + hi)
        lmid = 0.5 * (lo + mid)
        rmid = 0.5 * (mid + hi)
        flmid = f(lmid)
        frmid = f(rmid)
        left = simpson(lo, mid, flo, flmid, fmid)
        right = simpson(mid, hi, fmid, frmid, fhi)
        err = left + right - whole
        if depth >= max_depth or abs(err) <= 15.0 * eps:
            return left + right + err / 15.0
        return recurse(lo, mid, flo, flmid, fmid, left, eps / 2.0, depth + 1) + recurse(
            mid, hi, fmid, frmid, fhi, right, eps / 2.0, depth + 1
        )

    fa, fm, fb = f(a), f(0.5 * (a + b)), f(b)
    whole = simpson(a, b, fa, fm, fb)
    return recurse(a, b, fa, fm, fb, whole, tol, 0)


def integral_f_c(c: "float | CParameter", tol: float = _SIMPSON_TOL) -> float:
    """Integral of f_c over [0, 1] to absolute tolerance `tol`."""
    par = CParameter.of(c)
    return _adaptive_simpson(lambda x: f_c(par, x), 0.0, 1.0, tol, _SIMPSON_MAX_DEPTH)


def rank_error_bounds(c: "float | CParameter", n: int) -> RankErrorBounds:
    """Sandwich n*I - c/(c-1) <= E[rank error] <= n*I, plus crude bounds for c >= 2."""
    par = CParameter.of(c)
    if n < 1:
        raise ParameterError("n must be positive")
    integral = integral_f_c(par)
    gap = par.value / (par.value - 1.0)
    crude_lower = crude_upper = None
    if par.value >= 2.0:
        crude_lower, crude_upper = crude_rank_error_bounds(par, n)
    return RankErrorBounds(
        integral_lower=n * integral - gap,
        integral_upper=n * integral,
        crude_lower=crude_lower,
        crude_upper=crude_upper,
    )


def crude_rank_error_bounds(c: "float | CParameter", n: int) -> tuple[float, float]:
    """Closed bounds n/ceil(c) - c/(c-1) <= E[rank error] <= n/(floor(c) - 1), c >= 2."""
    par = CParameter.of(c)
    if par.value < 2.0:
        raise ParameterError("crude bounds require c >= 2")
    if n < 1:
        raise ParameterError("n must be positive")
    lower = n / math.ceil(par.value) - par.value / (par.value - 1.0)
    upper = n / (par.whole - 1)
    return lower, upper


def rank_error_summary(c: "float | CParameter", n: int) -> RankErrorSummary:
    """Exact value, applicable closed form, and bounds for one (c, n)."""
    par = CParameter.of(c)
    exact = expected_rank_error(best_of_c(par, n))
    closed: float | None = None
    if par.value == 2.0:
        closed = rank_error_c2_closed(n)
    elif par.whole == 1:
        closed = rank_error_c1eps_closed(par.frac, n)
    return RankErrorSummary(
        c=par.value,
        n=n,
        exact=exact,
        closed_form=closed,
        integral=integral_f_c(par),
        bounds=rank_error_bounds(par, n),
    )


def concentration_quantities(n: int) -> Concentration:
    """Worst-rank mean mu = n - 1 + n * H_{n-1} and tail rate p_star = 1/(n+1), c = 2."""
    if n < 2:
        raise ParameterError("n must be at least 2")
    harmonic = sum(1.0 / j for j in range(1, n))
    return Concentration(mu=(n - 1) + n * harmonic, p_star=1.0 / (n + 1))


def janson_tail(k: float, mu: float, p_star: float) -> float:
    """Tail bound P[X >= k * mu] <= exp(-p_star * mu * (k - 1 - ln k)) for k >= 1."""
    if k < 1.0:
        raise ParameterError("k must be at least 1")
    if mu <= 0.0 or not 0.0 < p_star <= 1.0:
        raise ParameterError("mu must be positive and p_star in (0, 1]")
    return math.exp(-p_star * mu * (k - 1.0 - math.log(k)))


def logistic_profile(n: int, x: float) -> float:
    """Expected position of the rank-ceil(xn) minimum relative to the median one.

    Best-of-2 gap rates are lambda_i = i (n - i) / n, so the profile is the
    partial sum of 1/lambda_i between the median index and ceil(xn); it
    converges to ln(x / (1 - x)).
    """
    if n < 2:
        raise ParameterError("n must be at least 2")
    if not 0.0 < x < 1.0:
        raise ParameterError("x must lie strictly between 0 and 1")
    mid = math.ceil(n / 2)
    target = math.ceil(x * n)

    def rate(i: int) -> float:
        return i * (n - i) / n

    if target >= mid:
        return sum(1.0 / rate(i) for i in range(mid, target))
    return -sum(1.0 / rate(i) for i in range(target, mid))


def logistic_limit(x: float) -> float:
    """Limit profile ln(x / (1 - x))."""
    if not 0.0 < x < 1.0:
        raise ParameterError("x must lie strictly between 0 and 1")
    return math.log(x / (1.0 - x))


def logistic_limit_inverse(t: float) -> float:
    """Inverse of the limit profile: e^t / (e^t + 1)."""
    if t >= 0.0:
        return 1.0 / (1.0 + math.exp(-t))
    e = math.exp(t)
    return e / (e + 1.0)
