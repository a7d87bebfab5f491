"""Exponential-jump token process and its relatives.

n tokens sit on the real line.  Each step picks the rank-i token with
probability sigma[i - 1] and advances it by an Exp(1) jump, re-sorting.
Under the strict drift condition the sorted gaps are independent
exponentials with rates lambda_i = n * sigma_upto[i-1] - i, the continuous
twin of the chain module's geometric gaps.

Also here: the billiard reading of a step (momentum handed over on contact,
same end state in the same floats), the can-kicking walk whose gaps at the
horizon are Exp(n - i), the divergence experiment for distributions without
drift, and the logistic position profile at large n.
"""

from __future__ import annotations

import heapq
import math
from bisect import bisect_right, insort
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .analytics import logistic_limit, logistic_profile, stationary_params
from .choice import ChoiceDistribution, best_of_c
from .errors import ParameterError
from .sampling import RandomSource, exp_array, exp_sample


@dataclass(frozen=True)
class TokenState:
    """Sorted token positions."""

    t: tuple[float, ...]

    def __post_init__(self) -> None:
        if any(a > b for a, b in zip(self.t, self.t[1:])):
            raise ParameterError("token positions must be sorted")

    @property
    def n(self) -> int:
        return len(self.t)

    @classmethod
    def origin(cls, n: int) -> "TokenState":
        if n < 1:
            raise ParameterError("n must be positive")
        return cls(t=(0.0,) * n)

    def gaps(self) -> tuple[float, ...]:
        return tuple(b - a for a, b in zip(self.t, self.t[1:]))

    def spread(self) -> float:
        return self.t[-1] - self.t[0]

    def prefix_means(self) -> tuple[float, ...]:
        acc = 0.0
        out = []
        for i, v in enumerate(self.t, start=1):
            acc += v
            out.append(acc / i)
        return tuple(out)


def step(
    state: TokenState, dist: ChoiceDistribution, rng: RandomSource, billiard: bool = False
) -> TokenState:
    """Advance the rank-sampled token by an Exp(1) jump.

    billiard=True walks the jump as successive contacts: the moving token
    stops exactly on its neighbor and hands the rest of the jump over.  The
    final multiset of positions is identical to the sorted-jump reading,
    float for float, because every intermediate rest point is a position the
    state already contained and the last mover lands on start + jump.
    """
    if state.n != dist.n:
        raise ParameterError(f"state has n={state.n} but distribution has n={dist.n}")
    u = rng.random()
    i = min(bisect_right(dist.sigma_upto, u), dist.n - 1)
    x = exp_sample(1.0, rng)
    t = list(state.t)
    if billiard:
        final = t[i] + x
        j = i
        while j + 1 < len(t) and t[j + 1] <= final:
            t[j] = t[j + 1]
            j += 1
        t[j] = final
    else:
        new = t[i] + x
        del t[i]
        insort(t, new)
    return TokenState(t=tuple(t))


def stationary_gap_sampler(dist: ChoiceDistribution, rng: RandomSource) -> tuple[float, ...]:
    """Exact draw of the n - 1 stationary gaps (independent exponentials)."""
    params = stationary_params(dist)
    return tuple(exp_sample(lam, rng) for lam in params.lam)


def stationary_gaps_many(dist: ChoiceDistribution, size: int, rng: RandomSource) -> np.ndarray:
    """(size, n-1) array of exact stationary gap draws."""
    params = stationary_params(dist)
    cols = [exp_array(lam, size, rng) for lam in params.lam]
    return np.column_stack(cols) if cols else np.zeros((size, 0))


def stationary_state_sampler(dist: ChoiceDistribution, rng: RandomSource) -> TokenState:
    """Exact stationary state with the smallest token pinned at 0."""
    gaps = stationary_gap_sampler(dist, rng)
    t = [0.0]
    for g in gaps:
        t.append(t[-1] + g)
    return TokenState(t=tuple(t))


def step_positions_many(
    positions: np.ndarray, dist: ChoiceDistribution, rng: RandomSource
) -> None:
    """One jump per row of a (trials, n) sorted position matrix, in place."""
    trials, n = positions.shape
    if n != dist.n:
        raise ParameterError("position rows must have length n")
    upto = np.asarray(dist.sigma_upto)
    idx = np.minimum(np.searchsorted(upto, rng.random_array(trials), side="right"), n - 1)
    positions[np.arange(trials), idx] += exp_array(1.0, trials, rng)
    positions.sort(axis=1)


@dataclass(frozen=True)
class GapMeansReport:
    """Per-gap time averages from one run."""

    n: int
    steps: int
    burnin: int
    mean_gaps: tuple[float, ...]
    mean_spread: float
    final: TokenState


def run_gap_means(
    dist: ChoiceDistribution,
    steps: int,
    rng: RandomSource,
    *,
    burnin: int = 10_000,
    init: str = "stationary",
) -> GapMeansReport:
    """Time-averaged gaps and spread over `steps` measured jumps."""
    if steps <= 0:
        raise ParameterError("steps must be positive")
    if burnin < 0:
        raise ParameterError("burnin must be non-negative")
    n = dist.n
    if init == "stationary":
        t = list(stationary_state_sampler(dist, rng).t)
    elif init == "origin":
        t = [0.0] * n
    else:
        raise ParameterError(f"unknown init {init!r}")
    upto = list(dist.sigma_upto)
    gap_sums = [0.0] * (n - 1)
    spread_sum = 0.0
    for s in range(burnin + steps):
        u = rng.random()
        i = bisect_right(upto, u)
        if i >= n:
            i = n - 1
        new = t[i] + exp_sample(1.0, rng)
        del t[i]
        insort(t, new)
        if s >= burnin:
            for j in range(n - 1):
                gap_sums[j] += t[j + 1] - t[j]
            spread_sum += t[-1] - t[0]
    state = TokenState(t=tuple(t))  # validates sortedness one last time
    return GapMeansReport(
        n=n,
        steps=steps,
        burnin=burnin,
        mean_gaps=tuple(g / steps for g in gap_sums),
        mean_spread=spread_sum / steps,
        final=state,
    )


def can_kick_run(n: int, horizon: float, rng: RandomSource) -> tuple[float, ...]:
    """Walk a line of n cans from 0 past `horizon`, kicking the leftmost first.

    Every can the walker meets before the horizon jumps Exp(1) forward.  When
    no can is left below the horizon she stands at the horizon; returned are
    the gaps (t_1 - horizon, t_2 - t_1, ..., t_n - t_{n-1}), whose law is
    Exp(n), Exp(n-1), ..., Exp(1).
    """
    if n < 1:
        raise ParameterError("n must be positive")
    if not horizon > 0:
        raise ParameterError("horizon must be positive")
    cans = [0.0] * n
    heapq.heapify(cans)
    while cans[0] < horizon:
        pos = heapq.heappop(cans)
        heapq.heappush(cans, pos + exp_sample(1.0, rng))
    final = sorted(cans)
    gaps = [final[0] - horizon]
    gaps.extend(b - a for a, b in zip(final, final[1:]))
    return tuple(gaps)


def can_kick_gaps_many(
    n: int, horizon: float, trials: int, rng: RandomSource, *, chunk: int | None = None
) -> np.ndarray:
    """(trials, n) gap samples of the can-kicking walk, by per-can renewal sums.

    A can's successive landing points do not depend on the other cans (the
    walker passes every point left of the horizon), so each can is a rate-1
    renewal process run to first passage of the horizon.  Same process as
    can_kick_run, vectorized.
    """
    if n < 1 or trials < 1:
        raise ParameterError("n and trials must be positive")
    if not horizon > 0:
        raise ParameterError("horizon must be positive")
    if chunk is None:
        chunk = max(1, 2_000_000 // n)
    out = np.empty((trials, n))
    done = 0
    while done < trials:
        m = min(chunk, trials - done)
        pos = np.zeros(m * n)
        active = pos < horizon
        while True:
            idx = np.flatnonzero(active)
            if idx.size == 0:
                break
            pos[idx] += exp_array(1.0, idx.size, rng)
            active[idx] = pos[idx] < horizon
        block = np.sort(pos.reshape(m, n), axis=1)
        gaps = np.empty((m, n))
        gaps[:, 0] = block[:, 0] - horizon
        gaps[:, 1:] = np.diff(block, axis=1)
        out[done : done + m] = gaps
        done += m
    return out


def divergence_experiment(
    dist: ChoiceDistribution,
    steps: int,
    checkpoints: Iterable[int],
    trials: int,
    rng: RandomSource,
) -> list[tuple[int, float]]:
    """Mean spread t_n - t_1 at each checkpoint, averaged over parallel trials.

    Accepts any rank distribution, drifting or not: this is the experiment
    that shows the spread growing without bound when the strict drift
    condition fails.
    """
    if trials < 1 or steps < 0:
        raise ParameterError("trials must be positive and steps non-negative")
    marks = sorted({int(s) for s in checkpoints})
    if any(s < 0 or s > steps for s in marks):
        raise ParameterError("checkpoints must lie within [0, steps]")
    n = dist.n
    positions = np.zeros((trials, n))
    series: list[tuple[int, float]] = []
    mark_idx = 0
    for s in range(steps + 1):
        if mark_idx < len(marks) and marks[mark_idx] == s:
            series.append((s, float(np.mean(positions[:, -1] - positions[:, 0]))))
            mark_idx += 1
        if s == steps:
            break
        step_positions_many(positions, dist, rng)
    return series


@dataclass(frozen=True)
class LogisticRow:
    x: float
    empirical: float
    finite_n: float
    limit: float


def logistic_positions(
    n: int,
    steps: int,
    rng: RandomSource,
    *,
    burnin: int = 10_000,
    xs: Sequence[float] = (0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9),
    trials: int = 1,
    sample_every: int | None = None,
) -> list[LogisticRow]:
    """Mean position of rank-ceil(xn) tokens relative to the median token, c = 2.

    Starts from the exact stationary law, burns in, then time-averages
    snapshots every `sample_every` jumps across `trials` independent chains.
    The finite-n and limit profiles ride along for comparison.
    """
    if n < 2:
        raise ParameterError("n must be at least 2")
    if steps <= 0 or trials < 1:
        raise ParameterError("steps and trials must be positive")
    for x in xs:
        if not 0.0 < x < 1.0:
            raise ParameterError("profile points must lie strictly between 0 and 1")
    if sample_every is None:
        sample_every = max(1, n // 4)
    dist = best_of_c(2.0, n)
    upto = list(dist.sigma_upto)
    mid = math.ceil(n / 2) - 1  # 0-based median token
    targets = [math.ceil(x * n) - 1 for x in xs]
    sums = [0.0] * len(xs)
    count = 0
    for trial in range(trials):
        sub = rng.split(f"trial-{trial}") if trials > 1 else rng
        t = list(stationary_state_sampler(dist, sub).t)
        for s in range(burnin + steps):
            u = sub.random()
            i = bisect_right(upto, u)
            if i >= n:
                i = n - 1
            new = t[i] + exp_sample(1.0, sub)
            del t[i]
            insort(t, new)
            if s >= burnin and (s - burnin) % sample_every == 0:
                count += 1
                for k, target in enumerate(targets):
                    sums[k] += t[target] - t[mid]
    return [
        LogisticRow(
            x=float(x),
            empirical=sums[k] / count,
            finite_n=logistic_profile(n, float(x)),
            limit=logistic_limit(float(x)),
        )
        for k, x in enumerate(xs)
    ]
