"""Exponential-jump token process: semantics, stationarity, can-kicking."""

import numpy as np
import pytest
import scipy.stats

from mqsim import ejp
from mqsim.choice import best_of_c, uniform_choice
from mqsim.errors import ParameterError
from mqsim.sampling import RandomSource

SEED = 1337
C2N4 = best_of_c(2.0, 4)


def test_token_state_requires_sorted_positions():
    s = ejp.TokenState(t=(0.0, 1.0, 2.5))
    assert s.n == 3
    assert s.gaps() == (1.0, 1.5)
    assert s.spread() == 2.5
    with pytest.raises(ParameterError):
        ejp.TokenState(t=(1.0, 0.5))


def test_billiard_and_jump_semantics_are_bit_identical():
    # Same draws, same end state: walking through contacts commutes with
    # jumping straight to the sorted position.
    rng_a = RandomSource(SEED)
    rng_b = rng_a.clone()
    a = ejp.stationary_state_sampler(C2N4, rng_a.split("init"))
    b = ejp.TokenState(t=a.t)
    ra, rb = rng_a.split("steps"), rng_b.split("steps")
    for _ in range(500):
        a = ejp.step(a, C2N4, ra, billiard=False)
        b = ejp.step(b, C2N4, rb, billiard=True)
        assert a.t == b.t


def test_step_keeps_count_and_order():
    rng = RandomSource(SEED)
    state = ejp.TokenState(t=(0.0, 0.0, 0.0, 0.0))
    for _ in range(100):
        state = ejp.step(state, C2N4, rng)
        assert len(state.t) == 4
        assert all(x <= y for x, y in zip(state.t, state.t[1:]))


def test_stationary_gap_means():
    rng = RandomSource(SEED)
    draws = ejp.stationary_gaps_many(C2N4, 200_000, rng)
    assert draws.shape == (200_000, 3)
    # lambda_i = n sigma_upto[i] - i gives rates (3/4, 1, 3/4) at n=4, c=2.
    expect = np.array([4.0 / 3.0, 1.0, 4.0 / 3.0])
    assert np.abs(draws.mean(axis=0) - expect).max() < 0.02


def test_run_gap_means_converges():
    report = ejp.run_gap_means(C2N4, 150_000, RandomSource(SEED), burnin=2_000)
    expect = (4.0 / 3.0, 1.0, 4.0 / 3.0)
    for got, want in zip(report.mean_gaps, expect):
        assert got == pytest.approx(want, rel=0.05)
    assert report.mean_spread == pytest.approx(sum(expect), rel=0.05)


def test_step_positions_many_preserves_sorted_rows():
    rng = RandomSource(SEED)
    pos = np.sort(rng.random_array(4 * 100).reshape(100, 4), axis=1)
    ejp.step_positions_many(pos, C2N4, rng)
    assert np.all(np.diff(pos, axis=1) >= 0)


def test_can_kick_gap_means_are_renewal_overshoots():
    # Gaps past any horizon are independent Exp(n), Exp(n-1), ..., Exp(1).
    n, trials = 6, 120_000
    gaps = ejp.can_kick_gaps_many(n, 25.0, trials, RandomSource(SEED))
    assert gaps.shape == (trials, n)
    expect = 1.0 / (n - np.arange(n))
    assert np.abs(gaps.mean(axis=0) - expect).max() < 0.01


def test_can_kick_walk_matches_vectorized_law():
    n = 4
    rng = RandomSource(SEED)
    walked = np.array([ejp.can_kick_run(n, 20.0, rng.split(f"w{t}")) for t in range(4_000)])
    fast = ejp.can_kick_gaps_many(n, 20.0, 50_000, rng.split("fast"))
    for j in range(n):
        _, p = scipy.stats.ks_2samp(walked[:, j], fast[:, j])
        assert p > 0.001


def test_divergence_experiment_grows_without_drift():
    series = ejp.divergence_experiment(
        uniform_choice(6), 20_000, (100, 20_000), 30, RandomSource(SEED)
    )
    assert [step for step, _ in series] == [100, 20_000]
    early, late = series[0][1], series[1][1]
    assert late > 2.0 * early


def test_divergence_experiment_stays_bounded_with_drift():
    series = ejp.divergence_experiment(
        best_of_c(2.0, 6), 20_000, (100, 20_000), 30, RandomSource(SEED)
    )
    # Stationary spread for n=6, c=2 is sum(1/lambda_i) ~ 4.4.
    assert series[1][1] < 8.0


def test_logistic_positions_schema_and_midpoint():
    rows = ejp.logistic_positions(
        64, steps=30_000, rng=RandomSource(SEED), burnin=1_000, xs=(0.3, 0.5, 0.7)
    )
    assert [r.x for r in rows] == [0.3, 0.5, 0.7]
    mid = rows[1]
    assert mid.finite_n == 0.0
    assert mid.limit == 0.0
    assert abs(mid.empirical) < 0.2
    assert rows[0].empirical < 0.0 < rows[2].empirical
