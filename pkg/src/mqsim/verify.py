"""Quantitative verification suites.

Each suite checks one family of claims end to end at desk scale: analytic
identities against the summation route, simulators against exact stationary
laws and the brute-force oracle, the data structure against the chain
abstraction.  Suites return a SuiteVerdict; `mq verify` serializes it and
sets the exit code, and the test suite asserts on it directly.

All statistical thresholds follow one convention: goodness-of-fit tests must
reach p > 0.001 after Bonferroni correction across the simultaneous
marginals of the same suite, so a healthy build fails any given suite with
probability about 1e-3, dominated by the pinned default seeds below which
are chosen to pass with margin.
"""

from __future__ import annotations

import time
from dataclasses import dataclass
from typing import Callable

import numpy as np

from . import chain, ejp, mqcore, stats
from .analytics import (
    concentration_quantities,
    crude_rank_error_bounds,
    expected_rank_error,
    f_c,
    integral_f_c,
    janson_tail,
    logistic_limit,
    logistic_profile,
    rank_error_c1eps_closed,
    rank_error_c2_closed,
    stationary_params,
)
from .choice import best_of_c, from_weights, uniform_choice
from .errors import DivergenceError
from .sampling import RandomSource

DEFAULT_SEED = 7

_P_FAMILY = 0.001  # family-wise floor; per-marginal threshold is this / #marginals


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    detail: str


@dataclass(frozen=True)
class SuiteVerdict:
    suite: str
    seconds: float
    checks: tuple[CheckResult, ...]

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def lines(self) -> list[str]:
        out = []
        for c in self.checks:
            out.append(f"  [{'pass' if c.passed else 'FAIL'}] {c.name}: {c.detail}")
        out.append(
            f"{'pass' if self.passed else 'FAIL'} {self.suite} "
            f"({len(self.checks)} checks, {self.seconds:.1f}s)"
        )
        return out


def _finish(suite: str, started: float, checks: list[CheckResult]) -> SuiteVerdict:
    return SuiteVerdict(suite=suite, seconds=time.perf_counter() - started, checks=tuple(checks))


def closed_form_identities(
    seed: int = DEFAULT_SEED, n: int | None = None, c: float | None = None
) -> SuiteVerdict:
    """Summation route equals the closed forms, absolute tolerance 1e-9."""
    t0 = time.perf_counter()
    checks = []
    for m in (2, 3, 10, 100, 1000):
        exact = expected_rank_error(best_of_c(2.0, m))
        closed = rank_error_c2_closed(m)
        err = abs(exact - closed)
        checks.append(
            CheckResult(
                name=f"two-choice n={m}",
                passed=err < 1e-9,
                detail=f"sum={exact:.10f} closed={closed:.10f} |diff|={err:.2e}",
            )
        )
    for eps in (0.25, 0.5, 0.75):
        for m in (4, 100):
            exact = expected_rank_error(best_of_c(1.0 + eps, m))
            closed = rank_error_c1eps_closed(eps, m)
            err = abs(exact - closed)
            checks.append(
                CheckResult(
                    name=f"fractional c=1+{eps} n={m}",
                    passed=err < 1e-9,
                    detail=f"sum={exact:.10f} closed={closed:.10f} |diff|={err:.2e}",
                )
            )
    spot = rank_error_c2_closed(16)
    checks.append(
        CheckResult(
            name="spot value n=16",
            passed=abs(spot - 12.34375) < 1e-12,
            detail=f"closed={spot!r} expected 12.34375",
        )
    )
    spot = rank_error_c1eps_closed(0.5, 100)
    checks.append(
        CheckResult(
            name="spot value c=1.5 n=100",
            passed=abs(spot - 189.6675) < 1e-9,
            detail=f"closed={spot!r} expected 189.6675",
        )
    )
    return _finish("closed-forms", t0, checks)


def bound_sandwich(
    seed: int = DEFAULT_SEED, n: int | None = None, c: float | None = None
) -> SuiteVerdict:
    """Integral sandwich for all c > 1 and the crude bounds for c >= 2."""
    t0 = time.perf_counter()
    checks = []
    slack = 1e-9
    for cv in (1.5, 2.0, 2.5, 3.0, 4.0, 8.0):
        integral = integral_f_c(cv)
        for m in (10, 100, 1000):
            exact = expected_rank_error(best_of_c(cv, m))
            lo = m * integral - cv / (cv - 1.0)
            hi = m * integral
            checks.append(
                CheckResult(
                    name=f"integral sandwich c={cv} n={m}",
                    passed=lo - slack <= exact <= hi + slack,
                    detail=f"{lo:.6f} <= {exact:.6f} <= {hi:.6f}",
                )
            )
            if cv >= 2.0:
                crude_lo, crude_hi = crude_rank_error_bounds(cv, m)
                checks.append(
                    CheckResult(
                        name=f"crude bounds c={cv} n={m}",
                        passed=crude_lo - slack <= exact <= crude_hi + slack,
                        detail=f"{crude_lo:.6f} <= {exact:.6f} <= {crude_hi:.6f}",
                    )
                )
    for cv, expected in ((2.0, 5.0 / 6.0), (1.5, 23.0 / 12.0)):
        integral = integral_f_c(cv)
        checks.append(
            CheckResult(
                name=f"integral value c={cv}",
                passed=abs(integral - expected) < 1e-8,
                detail=f"integral={integral:.10f} expected={expected:.10f}",
            )
        )
    for cv in (1.5, 2.0, 2.5, 3.0, 4.0, 8.0):
        val = f_c(cv, 1.0)
        expected = cv / (cv - 1.0)
        checks.append(
            CheckResult(
                name=f"density endpoint c={cv}",
                passed=abs(val - expected) < 1e-12,
                detail=f"f({cv}, 1)={val:.10f} expected={expected:.10f}",
            )
        )
    return _finish("bounds", t0, checks)


def _oracle_tv(dist, cap: int) -> tuple[float, bool]:
    oracle = chain.brute_force_stationary(dist, cap=cap)
    exact = {gv: chain.stationary_pmf(dist, gv) for gv in oracle.distribution}
    head = sum(exact.values())
    tv = 0.5 * (
        sum(abs(oracle.distribution[gv] - exact[gv]) for gv in exact) + max(0.0, 1.0 - head)
    )
    return tv, oracle.converged


def oracle_agreement(
    seed: int = DEFAULT_SEED, n: int | None = None, c: float | None = None
) -> SuiteVerdict:
    """Brute-force stationary solver agrees with the product law on tiny cases."""
    t0 = time.perf_counter()
    checks = []
    tv, conv = _oracle_tv(best_of_c(2.0, 2), cap=60)
    checks.append(
        CheckResult(
            name="n=2 c=2 cap=60",
            passed=conv and tv < 1e-6,
            detail=f"TV={tv:.3e} converged={conv}",
        )
    )
    for cv in (1.5, 3.0):
        tv, conv = _oracle_tv(best_of_c(cv, 2), cap=200)
        checks.append(
            CheckResult(
                name=f"n=2 c={cv} cap=200",
                passed=conv and tv < 1e-6,
                detail=f"TV={tv:.3e} converged={conv}",
            )
        )
    tv, conv = _oracle_tv(best_of_c(2.0, 3), cap=56)
    checks.append(
        CheckResult(
            name="n=3 c=2 cap=56",
            passed=conv and tv < 1e-6,
            detail=f"TV={tv:.3e} converged={conv}",
        )
    )
    boundary = chain.brute_force_stationary(from_weights([0.0, 1.0]), cap=40)
    checks.append(
        CheckResult(
            name="no drift flagged",
            passed=not boundary.converged and boundary.boundary_mass > 0.5,
            detail=f"boundary_mass={boundary.boundary_mass:.3f} converged={boundary.converged}",
        )
    )
    return _finish("oracle", t0, checks)


def chain_stationary_law(
    seed: int = DEFAULT_SEED, n: int | None = None, c: float | None = None
) -> SuiteVerdict:
    """n=2 chain: gap law, mean rank error, and brute-force oracle agreement."""
    t0 = time.perf_counter()
    checks = []
    dist = best_of_c(2.0, 2)
    rng = RandomSource(seed).split("chain-n2")
    report = chain.run(dist, steps=1_000_000, rng=rng, burnin=10_000, collect_gap_hists=True)
    p_gap = stationary_params(dist).p[0]
    gof = stats.chi_square_gof(
        report.gap_hists[0], lambda k: p_gap * (1.0 - p_gap) ** k, range(0, 80)
    )
    checks.append(
        CheckResult(
            name="gap chi-square vs Geom(1/3)",
            passed=gof.p_value > _P_FAMILY,
            detail=f"stat={gof.statistic:.2f} df={gof.df} p={gof.p_value:.4f}",
        )
    )
    mean_err = abs(report.mean_rank_error - 0.75)
    checks.append(
        CheckResult(
            name="mean rank error",
            passed=mean_err <= 0.02,
            detail=f"mean={report.mean_rank_error:.4f} target=0.75 tol=0.02",
        )
    )
    tv, conv = _oracle_tv(dist, cap=60)
    checks.append(
        CheckResult(
            name="oracle TV",
            passed=conv and tv < 1e-6,
            detail=f"TV={tv:.3e} converged={conv}",
        )
    )
    return _finish("stationary-chain", t0, checks)


def one_step_stationarity(
    seed: int = DEFAULT_SEED, n: int | None = None, c: float | None = None
) -> SuiteVerdict:
    """One deletion applied to exact stationary states keeps every gap marginal."""
    t0 = time.perf_counter()
    m = n if n is not None else 8
    cv = c if c is not None else 2.0
    dist = best_of_c(cv, m)
    params = stationary_params(dist)
    rng = RandomSource(seed).split(f"one-step-{m}")
    size = 100_000
    mat = chain.stationary_gaps_many(dist, size, rng)
    counts: list[dict[int, int]] = [{} for _ in range(m - 1)]
    for row in mat.tolist():
        out = chain.step_fast(chain.GapVector(d=tuple(row)), dist, rng)
        for j, v in enumerate(out.state.d):
            counts[j][v] = counts[j].get(v, 0) + 1
    checks = []
    threshold = _P_FAMILY / (m - 1)
    for j in range(m - 1):
        p_gap = params.p[j]
        gof = stats.chi_square_gof(
            counts[j], lambda k, p=p_gap: p * (1.0 - p) ** k, range(0, 250)
        )
        checks.append(
            CheckResult(
                name=f"gap {j} marginal",
                passed=gof.p_value > threshold,
                detail=(
                    f"Geom({p_gap:.4f}) stat={gof.statistic:.2f} df={gof.df} "
                    f"p={gof.p_value:.4f} (floor {threshold:.2e})"
                ),
            )
        )
    return _finish("one-step", t0, checks)


def mean_rank_error_at_scale(
    seed: int = DEFAULT_SEED, n: int | None = None, c: float | None = None
) -> SuiteVerdict:
    """n=16 chain run lands within 2% of the closed form, both routes."""
    t0 = time.perf_counter()
    dist = best_of_c(2.0, 16)
    target = rank_error_c2_closed(16)
    rng = RandomSource(seed)
    report = chain.run(dist, steps=1_000_000, rng=rng.split("scale-run"), burnin=100_000)
    rel = abs(report.mean_rank_error - target) / target
    checks = [
        CheckResult(
            name="chain run mean",
            passed=rel <= 0.02,
            detail=f"mean={report.mean_rank_error:.4f} target={target} rel={rel:.4f}",
        )
    ]
    samples = chain.rank_error_samples_many(dist, 1_000_000, rng.split("scale-exact"))
    mean = float(samples.mean())
    rel = abs(mean - target) / target
    checks.append(
        CheckResult(
            name="exact sampler mean",
            passed=rel <= 0.02,
            detail=f"mean={mean:.4f} target={target} rel={rel:.4f}",
        )
    )
    return _finish("mean-at-scale", t0, checks)


def ejp_stationary_law(
    seed: int = DEFAULT_SEED, n: int | None = None, c: float | None = None
) -> SuiteVerdict:
    """n=4 token process: gap means and one-step KS preservation."""
    t0 = time.perf_counter()
    dist = best_of_c(2.0, 4)
    params = stationary_params(dist)
    targets = tuple(1.0 / lam for lam in params.lam)
    rng = RandomSource(seed)
    report = ejp.run_gap_means(dist, 1_500_000, rng.split("gap-means"), burnin=10_000)
    checks = []
    for j, (got, want) in enumerate(zip(report.mean_gaps, targets)):
        rel = abs(got - want) / want
        checks.append(
            CheckResult(
                name=f"gap {j} mean",
                passed=rel <= 0.03,
                detail=f"mean={got:.4f} target={want:.4f} rel={rel:.4f}",
            )
        )
    size = 100_000
    r = rng.split("one-step")
    gaps = ejp.stationary_gaps_many(dist, size, r)
    positions = np.concatenate([np.zeros((size, 1)), np.cumsum(gaps, axis=1)], axis=1)
    ejp.step_positions_many(positions, dist, r)
    after = np.diff(positions, axis=1)
    threshold = _P_FAMILY / (dist.n - 1)
    for j, lam in enumerate(params.lam):
        ks = stats.ks_test_exponential(after[:, j], lam)
        checks.append(
            CheckResult(
                name=f"gap {j} one-step KS",
                passed=ks.p_value > threshold,
                detail=f"Exp({lam:.4f}) D={ks.statistic:.5f} p={ks.p_value:.4f}",
            )
        )
    return _finish("stationary-ejp", t0, checks)


def can_kicking_law(
    seed: int = DEFAULT_SEED, n: int | None = None, c: float | None = None
) -> SuiteVerdict:
    """Gaps past the horizon are Exp(n - i), by both the fast and faithful routes."""
    t0 = time.perf_counter()
    m = n if n is not None else 10
    horizon = 30.0
    rng = RandomSource(seed)
    gaps = ejp.can_kick_gaps_many(m, horizon, 100_000, rng.split("vectorized"))
    checks = []
    threshold = _P_FAMILY / m
    for j in range(m):
        ks = stats.ks_test_exponential(gaps[:, j], float(m - j))
        checks.append(
            CheckResult(
                name=f"gap {j} vectorized KS",
                passed=ks.p_value > threshold,
                detail=f"Exp({m - j}) D={ks.statistic:.5f} p={ks.p_value:.4f}",
            )
        )
    r = rng.split("faithful")
    walk = np.array([ejp.can_kick_run(m, horizon, r) for _ in range(2_000)])
    for j in range(m):
        ks = stats.ks_test_exponential(walk[:, j], float(m - j))
        checks.append(
            CheckResult(
                name=f"gap {j} walk KS",
                passed=ks.p_value > threshold,
                detail=f"Exp({m - j}) D={ks.statistic:.5f} p={ks.p_value:.4f}",
            )
        )
    return _finish("cankick", t0, checks)


def concentration_bounds(
    seed: int = DEFAULT_SEED, n: int | None = None, c: float | None = None
) -> SuiteVerdict:
    """Run maxima and stationary tails stay under the concentration bound."""
    t0 = time.perf_counter()
    rng = RandomSource(seed)
    m = n if n is not None else 64
    conc = concentration_quantities(m)
    dist = best_of_c(2.0, m)
    report = chain.run(
        dist, steps=m**3, rng=rng.split("run-max"), burnin=0, init="stationary"
    )
    limit = 3.0 * conc.mu
    checks = [
        CheckResult(
            name=f"run max n={m}",
            passed=report.max_rank_error <= limit,
            detail=(
                f"max={report.max_rank_error} over {m ** 3} deletions, "
                f"bound 3*mu={limit:.1f}"
            ),
        )
    ]
    conc4 = concentration_quantities(4)
    worst = chain.worst_rank_samples_many(best_of_c(2.0, 4), 1_000_000, rng.split("tail"))
    for k, emp in stats.tail_curve(worst, conc4.mu, (2.0, 2.5, 3.0, 3.5, 4.0)):
        bound = janson_tail(k, conc4.mu, conc4.p_star)
        checks.append(
            CheckResult(
                name=f"tail k={k} n=4",
                passed=emp <= bound,
                detail=f"empirical={emp:.5f} bound={bound:.5f}",
            )
        )
    return _finish("concentration", t0, checks)


def logistic_profile_check(
    seed: int = DEFAULT_SEED, n: int | None = None, c: float | None = None
) -> SuiteVerdict:
    """Relative token positions at n=4096 follow the logistic curve."""
    t0 = time.perf_counter()
    m = n if n is not None else 4096
    xs = (0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9)
    checks = []
    for x in xs:
        gap = abs(logistic_profile(m, x) - logistic_limit(x))
        checks.append(
            CheckResult(
                name=f"analytic x={x}",
                passed=gap <= 0.02,
                detail=f"finite_n={logistic_profile(m, x):+.4f} "
                f"limit={logistic_limit(x):+.4f} |diff|={gap:.4f}",
            )
        )
    rows = ejp.logistic_positions(
        m,
        steps=500_000,
        rng=RandomSource(seed).split("logistic"),
        burnin=4 * m,
        xs=xs,
        trials=2,
        sample_every=max(1, m // 4),
    )
    for row in rows:
        gap = abs(row.empirical - row.limit)
        checks.append(
            CheckResult(
                name=f"empirical x={row.x}",
                passed=gap <= 0.05,
                detail=f"empirical={row.empirical:+.4f} limit={row.limit:+.4f} |diff|={gap:.4f}",
            )
        )
    return _finish("logistic", t0, checks)


def divergence_check(
    seed: int = DEFAULT_SEED, n: int | None = None, c: float | None = None
) -> SuiteVerdict:
    """Without strict drift the spread grows; with it, it stays bounded."""
    t0 = time.perf_counter()
    m = n if n is not None else 8
    rng = RandomSource(seed)
    uniform = uniform_choice(m)
    series = ejp.divergence_experiment(
        uniform, steps=100_000, checkpoints=(10_000, 100_000), trials=100, rng=rng.split("u")
    )
    spread = dict(series)
    checks = [
        CheckResult(
            name="uniform spread grows",
            passed=spread[100_000] > spread[10_000],
            detail=f"mean spread {spread[10_000]:.1f} @1e4 -> {spread[100_000]:.1f} @1e5",
        )
    ]
    drifting = best_of_c(2.0, m)
    bounded = dict(
        ejp.divergence_experiment(
            drifting, steps=100_000, checkpoints=(100_000,), trials=20, rng=rng.split("b")
        )
    )
    checks.append(
        CheckResult(
            name="drifting spread bounded",
            passed=bounded[100_000] < spread[10_000],
            detail=f"two-choice spread {bounded[100_000]:.1f} @1e5 "
            f"< uniform {spread[10_000]:.1f} @1e4",
        )
    )
    try:
        chain.run(uniform, steps=10, rng=rng.split("c"), burnin=0)
        raised = False
    except DivergenceError:
        raised = True
    checks.append(
        CheckResult(
            name="chain rejects driftless law",
            passed=raised,
            detail="chain.run raised DivergenceError" if raised else "no error raised",
        )
    )
    return _finish("divergence", t0, checks)


def replay_equivalence(
    seed: int = DEFAULT_SEED, n: int | None = None, c: float | None = None
) -> SuiteVerdict:
    """Replayed data structure matches the chain abstraction and conserves elements."""
    t0 = time.perf_counter()
    m = n if n is not None else 16
    cv = c if c is not None else 2.0
    rng = RandomSource(seed)
    dist = best_of_c(cv, m)
    replay = mqcore.sequential_replay(
        m,
        cv,
        initial=10_000_000,
        deletions=1_000_000,
        rng=rng.split("replay"),
        burnin=100_000,
        checkpoints=(0, 1_000_000),
    )
    report = chain.run(dist, steps=1_000_000, rng=rng.split("chain"), burnin=100_000)
    tv = stats.tv_distance(
        stats.counts_to_pmf(replay.rank_error_hist),
        stats.counts_to_pmf(report.rank_error_hist),
    )
    checks = [
        CheckResult(
            name="rank error TV",
            passed=tv < 0.05,
            detail=f"TV={tv:.4f} replay mean={replay.mean_rank_error:.3f} "
            f"chain mean={report.mean_rank_error:.3f}",
        ),
        CheckResult(
            name="per-queue pops ascending",
            passed=replay.per_queue_ascending,
            detail="every queue popped strictly increasing keys",
        ),
    ]
    stress = mqcore.stress_test(
        m, cv, threads=8, ops_per_thread=125_000, prefill=10_000, seed=seed
    )
    checks.append(
        CheckResult(
            name="stress conservation",
            passed=stress.conserved,
            detail=(
                f"{stress.inserted} inserted, {stress.deleted} deleted, "
                f"{stress.drained} drained, dups={stress.duplicate_deletes}, "
                f"lost={stress.lost}, {stress.ops_per_second:,.0f} ops/s"
            ),
        )
    )
    return _finish("replay-equivalence", t0, checks)


def _suite_stationary_chain(
    seed: int = DEFAULT_SEED, n: int | None = None, c: float | None = None
) -> SuiteVerdict:
    """All chain stationarity claims: n=2 law, one-step marginals, mean at scale."""
    t0 = time.perf_counter()
    checks = list(chain_stationary_law(seed).checks)
    checks += list(one_step_stationarity(seed, n, c).checks)
    checks += list(mean_rank_error_at_scale(seed).checks)
    return _finish("stationary-chain", t0, checks)


Suite = Callable[..., SuiteVerdict]

SUITES: dict[str, Suite] = {
    "closed-forms": closed_form_identities,
    "bounds": bound_sandwich,
    "oracle": oracle_agreement,
    "stationary-chain": _suite_stationary_chain,
    "stationary-ejp": ejp_stationary_law,
    "cankick": can_kicking_law,
    "concentration": concentration_bounds,
    "logistic": logistic_profile_check,
    "divergence": divergence_check,
    "replay-equivalence": replay_equivalence,
}
