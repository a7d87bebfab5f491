"""Exact Markov chain over the rank gaps between queue minima.

State is the gap vector d of length n - 1: d[i] counts elements ranked
strictly between the (i+1)-th and (i+2)-th smallest queue minima ("dots"
between "balls").  One deletion activates ball b with probability
sigma[b - 1] and then walks right:

  * at ball b < n with d_{b} > 0 (1-based gap right of the ball): each dot
    in turn moves one gap left with probability (b - 1)/b or, with
    probability 1/b, is consumed, ending the deletion;
  * with no dots left the ball overtakes its right neighbor (b -> b + 1);
  * the rightmost ball draws against an unbounded supply: every skip pushes
    a new dot into the last gap, and the walk ends with probability 1/n per
    trial.

The rank error of the deletion is read off the pre-step state:
r_b - 1 = (b - 1) + sum of the first b - 1 gaps.  The stationary law is the
product of geometrics from analytics.stationary_params, which `step` /
`step_fast` preserve and `brute_force_stationary` reproduces from the
transition matrix alone.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Iterable, Mapping

import numpy as np

from .analytics import stationary_params
from .choice import ChoiceDistribution, sample_index, sample_index_many
from .errors import ParameterError, StateSpaceError
from .sampling import GeomConvention, RandomSource, geom_array, geom_sample

_ORACLE_MAX_STATES = 4225  # (cap + 1)^(n-1) guard: n <= 3 with cap <= 64
_ORACLE_L1_TOL = 1e-12
_ORACLE_MAX_ITER = 200_000
_ORACLE_BOUNDARY_TOL = 1e-2


@dataclass(frozen=True)
class GapVector:
    """Immutable gap vector; entry i is the number of dots in gap i (0-based)."""

    d: tuple[int, ...]

    def __post_init__(self) -> None:
        if any(x < 0 for x in self.d):
            raise ParameterError("gap entries must be non-negative")

    @property
    def n(self) -> int:
        return len(self.d) + 1

    @classmethod
    def zeros(cls, n: int) -> "GapVector":
        if n < 1:
            raise ParameterError("n must be positive")
        return cls(d=(0,) * (n - 1))

    def ranks(self) -> tuple[int, ...]:
        """Rank of each ball, smallest first: r_i = i + sum of gaps left of it."""
        out = [1]
        for gap in self.d:
            out.append(out[-1] + gap + 1)
        return tuple(out)

    def rank_error(self, ball: int) -> int:
        """Rank error of deleting the 0-based `ball`."""
        if not 0 <= ball < self.n:
            raise ParameterError("ball out of range")
        return ball + sum(self.d[:ball])

    def total(self) -> int:
        return sum(self.d)


@dataclass(frozen=True)
class TransitionTrace:
    """Intermediate states of one deletion walk.

    `visited` lists every transitional (gap tuple, 0-based ball) occupied,
    starting with the activated ball on the pre-step state; `tail_skips`
    counts the dots the rightmost ball pulled in from its unbounded supply.
    """

    activated: int
    visited: tuple[tuple[tuple[int, ...], int], ...]
    end_ball: int
    tail_skips: int


@dataclass(frozen=True)
class StepOutcome:
    state: GapVector
    ball: int
    rank_error: int
    trace: TransitionTrace | None


@dataclass(frozen=True)
class RankErrorSample:
    step: int
    value: int


@dataclass(frozen=True)
class CheckpointSnapshot:
    step: int
    ranks: tuple[int, ...]


@dataclass(frozen=True)
class RunReport:
    """Aggregated observations from a chain run."""

    n: int
    label: str
    steps: int
    burnin: int
    init: str
    fast: bool
    seed_note: str
    mean_rank_error: float
    max_rank_error: int
    rank_error_hist: dict[int, int]
    gap_hists: dict[int, dict[int, int]] | None
    transitional_counts: dict[tuple[tuple[int, ...], int], int] | None
    checkpoints: tuple[CheckpointSnapshot, ...]


@dataclass(frozen=True)
class OracleResult:
    """Stationary distribution of the cap-truncated transition matrix."""

    distribution: dict[GapVector, float]
    boundary_mass: float
    iterations: int
    iteration_converged: bool

    @property
    def converged(self) -> bool:
        return self.iteration_converged and self.boundary_mass < _ORACLE_BOUNDARY_TOL


def _step_fast_list(d: list[int], n: int, dist: ChoiceDistribution, rng: RandomSource) -> tuple[int, int]:
    """One deletion via geometric shortcuts.  Mutates d; returns (ball, rank error)."""
    ball = sample_index(dist, rng)
    err = ball + sum(d[:ball])
    b = ball + 1  # 1-based walk position
    if __debug__:
        before = sum(d)
    while True:
        if b == n:
            # Rightmost ball: Geom1(1/n) trials, every failure drags in a dot.
            k = geom_sample(1.0 / n, GeomConvention.TRIALS, rng)
            if n > 1:
                d[n - 2] += k - 1
            if __debug__:
                assert sum(d) == before + (k - 1)
            return ball, err
        dots = d[b - 1]
        if dots == 0:
            b += 1
            continue
        k = geom_sample(1.0 / b, GeomConvention.TRIALS, rng)
        if k <= dots:
            # k - 1 dots moved left, one consumed.
            d[b - 1] -= k
            if b >= 2:
                d[b - 2] += k - 1
            if __debug__:
                assert sum(d) == before - 1
            return ball, err
        # All dots moved left; the ball overtakes.
        d[b - 1] = 0
        if b >= 2:
            d[b - 2] += dots
        b += 1


def _step_faithful_list(
    d: list[int],
    n: int,
    dist: ChoiceDistribution,
    rng: RandomSource,
    record: bool,
) -> tuple[int, int, TransitionTrace | None]:
    """One deletion by per-dot Bernoulli trials, optionally recording the walk."""
    ball = sample_index(dist, rng)
    err = ball + sum(d[:ball])
    b = ball + 1
    visited: list[tuple[tuple[int, ...], int]] | None = [(tuple(d), ball)] if record else None
    while True:
        if b == n:
            skips = 0
            while rng.random() >= 1.0 / n:
                if n > 1:
                    d[n - 2] += 1
                skips += 1
                if visited is not None:
                    visited.append((tuple(d), b - 1))
            trace = None
            if record:
                trace = TransitionTrace(
                    activated=ball,
                    visited=tuple(visited or ()),
                    end_ball=n - 1,
                    tail_skips=skips,
                )
            return ball, err, trace
        if d[b - 1] == 0:
            b += 1
            if visited is not None:
                visited.append((tuple(d), b - 1))
            continue
        ended = False
        while d[b - 1] > 0:
            if rng.random() < 1.0 / b:
                d[b - 1] -= 1
                ended = True
                break
            # b >= 2 here: ball 1 consumes with probability 1.
            d[b - 1] -= 1
            d[b - 2] += 1
            if visited is not None:
                visited.append((tuple(d), b - 1))
        if ended:
            trace = None
            if record:
                trace = TransitionTrace(
                    activated=ball,
                    visited=tuple(visited or ()),
                    end_ball=b - 1,
                    tail_skips=0,
                )
            return ball, err, trace
        b += 1
        if visited is not None:
            visited.append((tuple(d), b - 1))


def step(
    state: GapVector,
    dist: ChoiceDistribution,
    rng: RandomSource,
    record_trace: bool = False,
) -> StepOutcome:
    """One deletion with per-dot Bernoulli trials (the literal walk)."""
    _check_match(state, dist)
    d = list(state.d)
    ball, err, trace = _step_faithful_list(d, state.n, dist, rng, record_trace)
    return StepOutcome(state=GapVector(tuple(d)), ball=ball, rank_error=err, trace=trace)


def step_fast(state: GapVector, dist: ChoiceDistribution, rng: RandomSource) -> StepOutcome:
    """One deletion with geometric shortcuts; same distribution as `step`."""
    _check_match(state, dist)
    d = list(state.d)
    ball, err = _step_fast_list(d, state.n, dist, rng)
    return StepOutcome(state=GapVector(tuple(d)), ball=ball, rank_error=err, trace=None)


def _check_match(state: GapVector, dist: ChoiceDistribution) -> None:
    if state.n != dist.n:
        raise ParameterError(f"state has n={state.n} but distribution has n={dist.n}")


def stationary_sampler(dist: ChoiceDistribution, rng: RandomSource) -> GapVector:
    """Exact draw from the stationary product of geometrics."""
    params = stationary_params(dist)
    d = tuple(geom_sample(p, GeomConvention.FAILURES, rng) for p in params.p)
    return GapVector(d=d)


def stationary_gaps_many(dist: ChoiceDistribution, size: int, rng: RandomSource) -> np.ndarray:
    """(size, n-1) array of exact stationary gap draws."""
    params = stationary_params(dist)
    cols = [geom_array(p, GeomConvention.FAILURES, size, rng) for p in params.p]
    return np.column_stack(cols) if cols else np.zeros((size, 0), dtype=np.int64)


def stationary_pmf(dist: ChoiceDistribution, d: "GapVector | tuple[int, ...]") -> float:
    """Stationary probability of one gap vector."""
    gaps = d.d if isinstance(d, GapVector) else tuple(d)
    params = stationary_params(dist)
    if len(gaps) != dist.n - 1:
        raise ParameterError("gap vector length must be n - 1")
    out = 1.0
    for gap, p in zip(gaps, params.p):
        out *= (1.0 - p) ** gap * p
    return out


def default_burnin(n: int) -> int:
    """Burn-in long enough to forget any small-state start: max(1e4, 50 n ln n)."""
    return max(10_000, int(50 * n * math.log(max(n, 2))))


def run(
    dist: ChoiceDistribution,
    steps: int,
    rng: RandomSource,
    *,
    burnin: int | None = None,
    init: "str | GapVector" = "zeros",
    use_fast: bool = True,
    checkpoints: Iterable[int] = (),
    collect_gap_hists: bool = False,
    collect_transitionals: bool = False,
    transitional_dot_cap: int = 12,
) -> RunReport:
    """Simulate `steps` measured deletions after `burnin` unmeasured ones.

    Checkpoints are absolute deletion indices on the whole timeline (0 is the
    initial state); burn-in only gates the statistics.  Requires the strict
    drift condition, like everything stationary about this chain.
    """
    params = stationary_params(dist)  # validates the drift condition
    n = dist.n
    if steps < 0:
        raise ParameterError("steps must be non-negative")
    if burnin is None:
        burnin = default_burnin(n)
    if burnin < 0:
        raise ParameterError("burnin must be non-negative")
    if isinstance(init, GapVector):
        _check_match(init, dist)
        d = list(init.d)
        init_name = "explicit"
    elif init == "zeros":
        d = [0] * (n - 1)
        init_name = "zeros"
    elif init == "stationary":
        d = list(stationary_sampler(dist, rng).d)
        init_name = "stationary"
    else:
        raise ParameterError(f"unknown init {init!r}")

    check_set = sorted({int(s) for s in checkpoints})
    for s in check_set:
        if s < 0 or s > burnin + steps:
            raise ParameterError("checkpoints must lie within the simulated range")
    snaps: list[CheckpointSnapshot] = []

    rank_hist: dict[int, int] = {}
    gap_hists: dict[int, dict[int, int]] | None = (
        {i: {} for i in range(n - 1)} if collect_gap_hists else None
    )
    transitional: dict[tuple[tuple[int, ...], int], int] | None = None
    if collect_transitionals:
        if n > 3:
            raise StateSpaceError("transitional-state counting is guarded to n <= 3")
        transitional = {}

    total = burnin + steps
    err_sum = 0
    err_max = 0
    measured = 0
    chk_idx = 0
    for s in range(total + 1):
        if chk_idx < len(check_set) and check_set[chk_idx] == s:
            snaps.append(CheckpointSnapshot(step=s, ranks=GapVector(tuple(d)).ranks()))
            chk_idx += 1
        if s == total:
            break
        if collect_transitionals:
            _, err, trace = _step_faithful_list(d, n, dist, rng, True)
            assert trace is not None
            if s >= burnin and transitional is not None:
                for visited_d, visited_ball in trace.visited:
                    if sum(visited_d) <= transitional_dot_cap:
                        key = (visited_d, visited_ball)
                        transitional[key] = transitional.get(key, 0) + 1
        elif use_fast:
            _, err = _step_fast_list(d, n, dist, rng)
        else:
            _, err, _ = _step_faithful_list(d, n, dist, rng, False)
        if s >= burnin:
            measured += 1
            err_sum += err
            if err > err_max:
                err_max = err
            rank_hist[err] = rank_hist.get(err, 0) + 1
            if gap_hists is not None:
                for i in range(n - 1):
                    h = gap_hists[i]
                    h[d[i]] = h.get(d[i], 0) + 1

    return RunReport(
        n=n,
        label=dist.label,
        steps=steps,
        burnin=burnin,
        init=init_name,
        fast=use_fast and not collect_transitionals,
        seed_note=f"seed={rng.seed}",
        mean_rank_error=err_sum / measured if measured else float("nan"),
        max_rank_error=err_max,
        rank_error_hist=rank_hist,
        gap_hists=gap_hists,
        transitional_counts=transitional,
        checkpoints=tuple(snaps),
    )


def transitional_frequencies(
    dist: ChoiceDistribution,
    steps: int,
    rng: RandomSource,
    *,
    dot_cap: int = 12,
    burnin: int | None = None,
) -> dict[tuple[tuple[int, ...], int], float]:
    """Visit rate of each transitional (gap tuple, 0-based ball) per deletion.

    In the stationary regime the rate of (d, i) is pi(d) * sigma_upto[i],
    which is what the tests compare against.
    """
    report = run(
        dist,
        steps,
        rng,
        burnin=burnin,
        init="stationary",
        collect_transitionals=True,
        transitional_dot_cap=dot_cap,
    )
    assert report.transitional_counts is not None
    return {key: count / steps for key, count in report.transitional_counts.items()}


def rank_error_samples_many(
    dist: ChoiceDistribution, size: int, rng: RandomSource
) -> np.ndarray:
    """Rank errors of `size` independent stationary deletions (exact sampling)."""
    params = stationary_params(dist)
    n = dist.n
    gaps = stationary_gaps_many(dist, size, rng)
    balls = sample_index_many(dist, size, rng)
    # r_b - 1 = b + sum of gaps left of ball b (0-based b).
    prefix = np.zeros((size, n), dtype=np.int64)
    if n > 1:
        np.cumsum(gaps, axis=1, out=prefix[:, 1:])
    return balls + prefix[np.arange(size), balls]


def worst_rank_samples_many(dist: ChoiceDistribution, size: int, rng: RandomSource) -> np.ndarray:
    """Stationary samples of r_n - 1, the rank error of the largest minimum."""
    gaps = stationary_gaps_many(dist, size, rng)
    return gaps.sum(axis=1) + (dist.n - 1)


def rank_error_pmf(dist: ChoiceDistribution, kmax: int) -> np.ndarray:
    """Exact stationary deletion rank-error probabilities for values 0..kmax.

    The error at ball b (0-based) is b plus the sum of the first b gaps, so
    the law is a sigma-mixture of truncated geometric convolutions.  Mass
    beyond kmax is dropped, not pooled.
    """
    if kmax < 0:
        raise ParameterError("kmax must be non-negative")
    params = stationary_params(dist)
    n = dist.n
    out = np.zeros(kmax + 1)
    conv = np.zeros(kmax + 1)
    conv[0] = 1.0  # law of the sum of the first 0 gaps
    k = np.arange(kmax + 1)
    for b in range(n):
        w = dist.sigma[b]
        if w > 0.0 and b <= kmax:
            out[b:] += w * conv[: kmax + 1 - b]
        if b < n - 1:
            p = params.p[b]
            conv = np.convolve(conv, p * (1.0 - p) ** k)[: kmax + 1]
    return out


def _cascade_end_distribution(
    d0: tuple[int, ...], ball0: int, n: int, cap: int
) -> dict[tuple[int, ...], float]:
    """Exact end-state law of one deletion from (d0, activated ball0), 0-based ball.

    Mass that would push a gap beyond `cap` is clamped onto the cap boundary.
    """
    out: dict[tuple[int, ...], float] = {}
    frontier: dict[tuple[tuple[int, ...], int], float] = {(d0, ball0 + 1): 1.0}
    while frontier:
        # Walks only move right or shrink the active gap, so this order is topological.
        key = min(frontier, key=lambda k: (k[1], -(k[0][k[1] - 1] if k[1] < n else 0)))
        (d, b) = key
        mass = frontier.pop(key)
        if b == n:
            q = (n - 1) / n
            if n == 1:
                out[d] = out.get(d, 0.0) + mass
                continue
            room = cap - d[n - 2]
            prob_end = 1.0 / n
            for j in range(room):
                dd = d[: n - 2] + (d[n - 2] + j,)
                out[dd] = out.get(dd, 0.0) + mass * prob_end * q**j
            dd = d[: n - 2] + (cap,)
            out[dd] = out.get(dd, 0.0) + mass * q**room
            continue
        dots = d[b - 1]
        if dots == 0:
            nkey = (d, b + 1)
            frontier[nkey] = frontier.get(nkey, 0.0) + mass
            continue
        fail = (b - 1) / b
        succ = 1.0 / b
        for k in range(1, dots + 1):
            dd = list(d)
            dd[b - 1] -= k
            if b >= 2:
                dd[b - 2] = min(cap, dd[b - 2] + k - 1)
            tdd = tuple(dd)
            out[tdd] = out.get(tdd, 0.0) + mass * succ * fail ** (k - 1)
        dd = list(d)
        dd[b - 1] = 0
        if b >= 2:
            dd[b - 2] = min(cap, dd[b - 2] + dots)
        nkey = (tuple(dd), b + 1)
        frontier[nkey] = frontier.get(nkey, 0.0) + mass * fail**dots
    return out


def brute_force_stationary(dist: ChoiceDistribution, cap: int) -> OracleResult:
    """Stationary law of the cap-truncated chain by explicit power iteration.

    Guarded to n <= 3 and (cap+1)^(n-1) states so the dense matrix stays
    small.  Mass escaping the cap is clamped to the boundary; a
    non-negligible stationary boundary mass marks the result non-convergent
    (no stationary law exists or the cap is too tight).
    """
    n = dist.n
    if n > 3:
        raise StateSpaceError("brute force oracle is guarded to n <= 3")
    if cap < 0:
        raise StateSpaceError("cap must be non-negative")
    states = list(itertools.product(range(cap + 1), repeat=n - 1))
    size = len(states)
    if size > _ORACLE_MAX_STATES:
        raise StateSpaceError(f"state space {size} exceeds {_ORACLE_MAX_STATES}")
    index = {s: k for k, s in enumerate(states)}
    matrix = np.zeros((size, size))
    for s, row in zip(states, range(size)):
        for ball in range(n):
            weight = dist.sigma[ball]
            if weight == 0.0:
                continue
            for end, prob in _cascade_end_distribution(s, ball, n, cap).items():
                matrix[row, index[end]] += weight * prob
    pi = np.full(size, 1.0 / size)
    iterations = 0
    converged = False
    while iterations < _ORACLE_MAX_ITER:
        nxt = pi @ matrix
        nxt /= nxt.sum()
        delta = np.abs(nxt - pi).sum()
        pi = nxt
        iterations += 1
        if delta < _ORACLE_L1_TOL:
            converged = True
            break
    boundary = 0.0
    for s, k in index.items():
        if any(x == cap for x in s) and cap > 0:
            boundary += pi[k]
    return OracleResult(
        distribution={GapVector(s): float(pi[index[s]]) for s in states},
        boundary_mass=float(boundary),
        iterations=iterations,
        iteration_converged=converged,
    )


def hist_to_pmf(hist: Mapping[int, int]) -> dict[int, float]:
    """Normalize an integer histogram into a pmf dict."""
    total = sum(hist.values())
    if total <= 0:
        raise ParameterError("histogram is empty")
    return {k: v / total for k, v in hist.items()}
