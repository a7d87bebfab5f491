"""Gap-vector deletion chain: both step routes, the oracle, run mechanics."""

import math

import numpy as np
import pytest
import scipy.stats

from mqsim import chain
from mqsim.chain import GapVector
from mqsim.choice import best_of_c, uniform_choice
from mqsim.errors import DivergenceError, ParameterError, StateSpaceError
from mqsim.sampling import RandomSource

SEED = 424242
C2N2 = best_of_c(2.0, 2)
C2N4 = best_of_c(2.0, 4)


def test_gap_vector_basics():
    g = GapVector((2, 0, 1))
    assert g.n == 4
    assert g.ranks() == (1, 4, 5, 7)
    assert g.rank_error(0) == 0
    assert g.rank_error(2) == 4
    assert g.total() == 3
    with pytest.raises(ParameterError):
        GapVector((1, -1))
    assert GapVector.zeros(3).d == (0, 0)


def test_step_conserves_structure():
    rng = RandomSource(SEED)
    state = GapVector.zeros(4)
    for _ in range(200):
        out = chain.step(state, C2N4, rng)
        assert out.rank_error == out.ball + sum(state.d[: out.ball])
        assert all(x >= 0 for x in out.state.d)
        state = out.state


def test_step_rejects_mismatched_sizes():
    with pytest.raises(ParameterError):
        chain.step(GapVector.zeros(3), C2N4, RandomSource(SEED))


def test_fast_and_faithful_routes_agree_in_law():
    # The two implementations consume randomness differently, so compare
    # their post-step laws from a fixed state, not their trajectories.
    rng = RandomSource(SEED)
    start = GapVector((1, 2, 0))
    trials = 20_000

    def sums(step_fn, child):
        out = np.empty(trials, dtype=np.int64)
        for t in range(trials):
            out[t] = step_fn(start, C2N4, child).state.total()
        return out

    a = sums(chain.step, rng.split("faithful"))
    b = sums(chain.step_fast, rng.split("fast"))
    amax = max(a.max(), b.max())
    bins = np.arange(amax + 2)
    ca, _ = np.histogram(a, bins=bins)
    cb, _ = np.histogram(b, bins=bins)
    keep = (ca + cb) >= 10  # pool sparse tail cells for the contingency test
    table = np.array([np.append(ca[keep], ca[~keep].sum()),
                      np.append(cb[keep], cb[~keep].sum())])
    table = table[:, table.sum(axis=0) > 0]
    _, p, _, _ = scipy.stats.chi2_contingency(table)
    assert p > 0.001


def test_trace_records_the_walk():
    rng = RandomSource(SEED)
    out = chain.step(GapVector((3, 3, 3)), C2N4, rng, record_trace=True)
    assert out.trace is not None
    assert out.trace.activated == out.ball
    first_state, first_ball = out.trace.visited[0]
    assert first_state == (3, 3, 3)
    assert first_ball == out.ball


def test_stationary_sampler_matches_geometric_marginals():
    rng = RandomSource(SEED)
    draws = chain.stationary_gaps_many(C2N2, 100_000, rng)
    assert draws.shape == (100_000, 1)
    # p = 1/3 in the failures convention: mean (1-p)/p = 2.
    assert abs(draws.mean() - 2.0) < 0.05


def test_stationary_pmf_is_the_geometric_product():
    p = 1.0 / 3.0
    for k in range(5):
        expect = p * (1.0 - p) ** k
        assert chain.stationary_pmf(C2N2, (k,)) == pytest.approx(expect, rel=1e-12)
    with pytest.raises(ParameterError):
        chain.stationary_pmf(C2N2, (1, 2))


def test_oracle_matches_analytic_stationary_law():
    res = chain.brute_force_stationary(C2N2, cap=60)
    assert res.converged
    tv = 0.0
    for state, mass in res.distribution.items():
        tv += abs(mass - chain.stationary_pmf(C2N2, state))
    assert 0.5 * tv < 1e-6


def test_oracle_flags_boundary_mass_without_drift():
    # Uniform sits on the drift boundary: the truncated chain is exactly
    # uniform over the cap+1 states, so mass never leaves the boundary cell.
    res = chain.brute_force_stationary(uniform_choice(2), cap=40)
    assert not res.converged
    assert res.boundary_mass == pytest.approx(1.0 / 41.0, rel=1e-9)
    # Past the boundary, mass piles up against the cap outright.
    from mqsim.choice import from_weights

    res = chain.brute_force_stationary(from_weights([0.0, 1.0]), cap=40)
    assert not res.converged
    assert res.boundary_mass > 0.5


def test_oracle_rejects_oversized_state_spaces():
    with pytest.raises(StateSpaceError):
        chain.brute_force_stationary(C2N4, cap=64)
    with pytest.raises(ParameterError):
        chain.brute_force_stationary(C2N2, cap=-1)


def test_rank_error_pmf_mass_and_mean():
    from mqsim.analytics import expected_rank_error

    for n in (2, 4, 16):
        dist = best_of_c(2.0, n)
        pmf = chain.rank_error_pmf(dist, 600)
        assert pmf.sum() == pytest.approx(1.0, abs=1e-9)
        mean = float(np.arange(601) @ pmf)
        assert mean == pytest.approx(expected_rank_error(dist), abs=1e-6)
    with pytest.raises(ParameterError):
        chain.rank_error_pmf(C2N2, -1)


def test_rank_error_pmf_head_is_sigma_weighted():
    # P[E = 0] = sigma_1 * P[d_0 contributes nothing] ... for ball 0 alone.
    dist = C2N2
    pmf = chain.rank_error_pmf(dist, 10)
    assert pmf[0] == pytest.approx(dist.sigma[0], rel=1e-12)
    # P[E = 1] needs ball 1 and first gap 0: sigma_2 * p.
    assert pmf[1] == pytest.approx(dist.sigma[1] / 3.0, rel=1e-12)


def test_run_reports_and_checkpoints():
    rng = RandomSource(SEED)
    report = chain.run(
        C2N4,
        steps=5_000,
        rng=rng,
        burnin=500,
        checkpoints=(0, 500, 5_500),
        collect_gap_hists=True,
    )
    assert report.steps == 5_000 and report.burnin == 500
    assert [s.step for s in report.checkpoints] == [0, 500, 5_500]
    assert report.checkpoints[0].ranks == (1, 2, 3, 4)  # zeros start
    assert sum(report.rank_error_hist.values()) == 5_000
    assert set(report.gap_hists) == {0, 1, 2}
    assert report.max_rank_error >= 0


def test_run_zero_steps_has_nan_mean():
    report = chain.run(C2N4, steps=0, rng=RandomSource(SEED), burnin=0)
    assert math.isnan(report.mean_rank_error)
    assert report.rank_error_hist == {}


def test_run_requires_drift():
    with pytest.raises(DivergenceError):
        chain.run(uniform_choice(4), steps=10, rng=RandomSource(SEED))


def test_run_mean_near_expected_value():
    from mqsim.analytics import expected_rank_error

    report = chain.run(C2N4, steps=200_000, rng=RandomSource(SEED), burnin=5_000)
    assert report.mean_rank_error == pytest.approx(
        expected_rank_error(C2N4), rel=0.05
    )


def test_rank_error_samples_match_pmf():
    rng = RandomSource(SEED)
    samples = chain.rank_error_samples_many(C2N4, 100_000, rng)
    pmf = chain.rank_error_pmf(C2N4, 40)
    for k in range(6):
        assert (samples == k).mean() == pytest.approx(float(pmf[k]), abs=0.01)


def test_default_burnin_grows_with_n():
    assert chain.default_burnin(2) == 10_000
    assert chain.default_burnin(4096) == int(50 * 4096 * math.log(4096))
