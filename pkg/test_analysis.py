import math
from fractions import Fraction

import numpy as np
import pytest

from analysis.estimation import (
    estimate_layer_threshold,
    estimate_rainbow_probability,
    estimate_threshold,
    probability_sweep,
    run_trials,
    wilson_interval,
)
from analysis.experiments import (
    ball_statistics_experiment,
    expansion_bounds,
    expansion_experiment,
    occupancy_experiment,
)
from analysis.formulas import (
    corollary_layer_bounds,
    enumerated_image_size,
    expected_image_size,
    expected_image_size_exact,
    reference_formulas,
    theorem_constants,
    threshold_radius,
)
from errors import BudgetError, ConfigError, DomainError
from geometry.grid import SQRT2
from geometry.probability import pair_adjacency_probability
from settings import settings


def test_threshold_radius_values():
    assert threshold_radius(10 ** 6, 2) == pytest.approx(0.06096, abs=1e-4)
    assert threshold_radius(10 ** 4, 3) == pytest.approx(0.06721, abs=1e-4)
    with pytest.raises(DomainError):
        threshold_radius(100, 1)
    with pytest.raises(DomainError):
        threshold_radius(1, 2)


def test_threshold_radius_decreasing():
    for h in range(2, 8):
        values = [threshold_radius(n, h) for n in range(8, 4000, 37)]
        assert all(b < a for a, b in zip(values, values[1:]))
    for n in (8, 100, 10 ** 5):
        values = [threshold_radius(n, h) for h in range(2, 17)]
        assert all(b < a for a, b in zip(values, values[1:]))


def test_theorem_constants():
    special = theorem_constants(2)
    assert (special.b_lower, special.c_upper) == (0.68, 0.56)
    three = theorem_constants(3)
    assert three.b_lower == pytest.approx(1.4217, abs=1e-4)
    assert three.c_upper == pytest.approx(0.005375, abs=1e-6)
    assert theorem_constants(2, general=True).b_lower == pytest.approx(1.0079, abs=1e-4)
    for h in range(2, 17):
        constants = theorem_constants(h)
        assert constants.b_lower > constants.c_upper > 0
    with pytest.raises(DomainError):
        theorem_constants(1)


def test_corollary_layer_bounds():
    bounds = corollary_layer_bounds(10 ** 6, 0.1)
    assert bounds.h0 == 1
    assert bounds.h1 is None
    assert bounds.h1_quotient < 0
    assert any("h1" in note for note in bounds.notes)

    near_one = corollary_layer_bounds(10 ** 12, 0.999)
    assert near_one.h0 is not None and near_one.h0 >= 1

    with pytest.raises(DomainError):
        corollary_layer_bounds(2, 0.1)
    with pytest.raises(DomainError):
        corollary_layer_bounds(100, 1.0)


def test_reference_formulas():
    assert reference_formulas(10 ** 6, 0.1).r_c == pytest.approx(0.001887, abs=1e-6)
    assert reference_formulas(10 ** 6, 0.1).diameter_estimate == pytest.approx(14.142, abs=1e-3)
    assert reference_formulas(math.ceil(math.e ** math.e), 0.5).r_c > 0
    with pytest.raises(DomainError):
        reference_formulas(2, 0.1)
    with pytest.raises(DomainError):
        reference_formulas(100, 0.0)


def test_expected_image_size():
    assert expected_image_size(3, 2) == pytest.approx(1.75)
    assert expected_image_size(2, 2) == pytest.approx(1.5)
    assert all(expected_image_size(m, 1) == 1.0 for m in range(1, 20))
    assert expected_image_size(1000, 1000) == pytest.approx(632.30, abs=0.01)


def test_expected_image_size_matches_enumeration():
    for m in range(1, 7):
        for k in range(1, 7):
            exact = expected_image_size_exact(m, k)
            assert exact == enumerated_image_size(m, k)
            assert 1 <= exact <= min(m, k)
            assert float(exact) == pytest.approx(expected_image_size(m, k), rel=1e-12)
    assert expected_image_size_exact(3, 2) == Fraction(7, 4)


def test_wilson_interval():
    low, high = wilson_interval(0, 20)
    assert low == 0.0 and 0 < high < 0.2
    low, high = wilson_interval(20, 20)
    assert high == 1.0 and low > 0.8
    low, high = wilson_interval(37, 100)
    assert low < 0.37 < high
    with pytest.raises(ConfigError):
        wilson_interval(5, 0)


def test_probability_extremes():
    assert estimate_rainbow_probability(12, SQRT2, 2, trials=5, seed=1, workers=1).p_hat == 1.0
    assert estimate_rainbow_probability(12, 0.0, 3, trials=5, seed=1, workers=1).p_hat == 0.0


def test_single_pair_probability():
    trials = 20000
    estimate = estimate_rainbow_probability(2, 0.5, 1, trials=trials, seed=3)
    p = pair_adjacency_probability(0.5)
    assert abs(estimate.p_hat - p) <= 4 * math.sqrt(p * (1 - p) / trials)
    assert estimate.ci_low <= estimate.p_hat <= estimate.ci_high


@pytest.mark.slow
def test_single_pair_probability_full_scale():
    estimate = estimate_rainbow_probability(2, 0.5, 1, trials=10 ** 5, seed=3)
    assert estimate.p_hat == pytest.approx(0.4833, abs=0.01)


def test_estimate_independent_of_worker_count():
    one = estimate_rainbow_probability(40, 0.35, 2, trials=24, seed=11, workers=1)
    three = estimate_rainbow_probability(40, 0.35, 2, trials=24, seed=11, workers=3)
    assert one == three
    assert run_trials(40, 0.35, 2, 24, 11, workers=1) == run_trials(40, 0.35, 2, 24, 11, workers=2)


def test_full_report_observables():
    estimate = estimate_rainbow_probability(30, 0.3, 2, trials=8, seed=4, full_report=True, workers=1)
    plain = estimate_rainbow_probability(30, 0.3, 2, trials=8, seed=4, workers=1)
    assert estimate.successes == plain.successes
    assert estimate.mean_unconnected_pairs >= 0
    assert estimate.mean_max_source_unconnected <= 29
    if estimate.successes == estimate.trials:
        assert estimate.mean_unconnected_pairs == 0


def test_budget_refused_before_work(monkeypatch):
    monkeypatch.setattr(settings.simulation, "memory_budget_bytes", 64)
    with pytest.raises(BudgetError):
        estimate_rainbow_probability(500, 0.1, 4, trials=3, seed=0, workers=1)


def test_sweep_is_ordered_and_monotone():
    estimates = probability_sweep(128, 2, [0.4, 0.1, 0.25, 0.6, 0.2], trials=30, seed=9, workers=1)
    radii = [e.r for e in estimates]
    assert radii == sorted(radii)
    values = [e.p_hat for e in estimates]
    assert all(b >= a for a, b in zip(values, values[1:]))


@pytest.mark.slow
def test_sweep_monotone_full_scale():
    base = threshold_radius(1024, 2)
    radii = [base * f for f in (0.5, 0.8, 1.0, 1.2, 1.5, 2.0, 3.0)]
    estimates = probability_sweep(1024, 2, radii, trials=200, seed=2)
    for a, b in zip(estimates, estimates[1:]):
        assert b.p_hat >= a.p_hat - 2 * max(a.half_width, b.half_width)


def test_threshold_single_pair():
    result = estimate_threshold(2, 1, trials_per_point=2000, r_tolerance=1e-3, seed=5)
    assert abs(result.r_hat - 0.512) < 0.04
    lo, hi = result.bracket
    assert lo <= result.r_hat <= hi
    assert hi - lo <= 1e-3
    assert not result.degenerate


def test_threshold_degenerate():
    result = estimate_threshold(1, 2, trials_per_point=50, r_tolerance=0.01, seed=0)
    assert result.degenerate
    assert result.r_hat == 0.0
    assert result.flags


def test_threshold_preconditions():
    with pytest.raises(ConfigError):
        estimate_threshold(10, 2, trials_per_point=49, r_tolerance=0.01, seed=0)
    with pytest.raises(ConfigError):
        estimate_threshold(10, 2, trials_per_point=50, r_tolerance=0.0, seed=0)


def test_threshold_bracket_invariant():
    result = estimate_threshold(64, 2, trials_per_point=50, r_tolerance=0.02, seed=8, workers=1)
    lo, hi = result.bracket
    below = [e.p_hat for e in result.trace if e.r == lo]
    above = [e.p_hat for e in result.trace if e.r == hi]
    assert all(p < 0.5 for p in below)
    assert all(p >= 0.5 for p in above)
    assert lo <= result.r_hat <= hi


@pytest.mark.slow
def test_threshold_bracket_full_scale():
    n, h = 4096, 2
    result = estimate_threshold(n, h, trials_per_point=200, r_tolerance=0.01, seed=2024)
    base = threshold_radius(n, h)
    assert 0.3 * base <= result.r_hat <= 1.6 * base
    assert not result.noisy
    trace = sorted(result.trace, key=lambda e: e.r)
    for lower, upper in zip(trace, trace[1:]):
        assert lower.p_hat - upper.p_hat <= 2 * max(lower.half_width, upper.half_width)


def test_layer_threshold_monotone_in_h():
    result = estimate_layer_threshold(60, 0.25, 4, trials=20, seed=6, workers=1)
    values = [e.p_hat for e in result.estimates]
    assert [e.h for e in result.estimates] == [1, 2, 3, 4]
    assert all(b >= a for a, b in zip(values, values[1:]))
    assert result.bounds is not None
    if result.h_hat is not None:
        assert result.estimates[result.h_hat - 1].p_hat >= 0.5


def test_expansion_bound_values():
    lower, upper = expansion_bounds(10 ** 4, 0.05, 1)
    assert lower == pytest.approx(9.82, abs=0.01)
    assert upper == pytest.approx(117.81, abs=0.01)
    lower, upper = expansion_bounds(10 ** 4, 0.05, 2)
    assert lower == pytest.approx(61.36, abs=0.01)
    assert upper == pytest.approx(13877, abs=1)


def test_expansion_experiment_reduced_scale():
    n, h = 5000, 3
    r = 1.43 * (math.log(n) / n ** 2) ** (1 / 6)
    result = expansion_experiment(n, r, h, source_samples=10, seed=3)
    assert result.in_regime
    assert result.profiles == 10 * 6
    assert {row.ell for row in result.rows} == {1, 2}
    for ell in (1, 2):
        assert result.satisfaction[ell] >= 0.95


@pytest.mark.slow
def test_expansion_experiment_full_scale():
    n, h = 50000, 3
    r = 1.43 * (math.log(n) / n ** 2) ** (1 / 6)
    result = expansion_experiment(n, r, h, source_samples=50, seed=1)
    assert result.profiles == 50 * 6
    for ell in (1, 2):
        assert result.satisfaction[ell] >= 0.95


def test_expansion_out_of_regime_label():
    result = expansion_experiment(300, 0.2, 2, source_samples=3, seed=1)
    assert not result.in_regime
    assert set(result.satisfaction) == {1}


def test_expansion_sampled_permutations():
    result = expansion_experiment(300, 0.2, 3, source_samples=4, seed=1, permutations_per_source=2)
    assert result.profiles == 8


def test_occupancy_trivial():
    stats = occupancy_experiment(1, 1, trials=50, seed=0)
    assert stats.empirical_mean == 1.0
    assert stats.max_observed_deviation == 0.0


def test_occupancy_concentration():
    m = k = 1000
    trials = 10 ** 4
    stats = occupancy_experiment(m, k, trials=trials, seed=12)
    assert abs(stats.empirical_mean - 632.30) <= 0.01 * 632.30
    assert [row.a for row in stats.tails] == pytest.approx([math.sqrt(m) * c for c in (1, 2, 3)])
    for row in stats.tails:
        bound = row.mcdiarmid_bound
        assert row.frequency <= bound + 4 * math.sqrt(bound * (1 - bound) / trials) + 1e-12


def test_occupancy_shifted_bound_trivial_below_shift():
    stats = occupancy_experiment(100, 10, trials=200, seed=1, a_values=[10.0, 600.0])
    assert stats.tails[0].shifted_bound == 1.0
    assert stats.tails[1].shifted_bound < 1.0


def test_occupancy_shifted_frequency_counts_ties():
    # k = 1 maps everything to one point, so |Y - m| = m - 1 exactly
    stats = occupancy_experiment(2, 1, trials=20, seed=0, a_values=[1.0, 1.5])
    assert stats.tails[0].shifted_frequency == 1.0
    assert stats.tails[1].shifted_frequency == 0.0


def test_occupancy_deterministic():
    a = occupancy_experiment(50, 40, trials=300, seed=5)
    b = occupancy_experiment(50, 40, trials=300, seed=5)
    assert np.array_equal(a.image_sizes, b.image_sizes)


def test_ball_statistics():
    stats = ball_statistics_experiment(2000, 0.05, trials=50, seed=17)
    predicted = 1999 * pair_adjacency_probability(0.05)
    assert stats.predicted_mean == pytest.approx(15.040, abs=1e-3)
    assert stats.lower_bound == pytest.approx(3.927, abs=1e-3)
    assert stats.upper_bound == pytest.approx(15.708, abs=1e-3)
    assert abs(stats.mean_z - predicted) <= 0.03 * predicted
    assert stats.lower_bound <= stats.mean_z <= stats.upper_bound
    assert stats.violation_rate <= stats.concentration_bound + 0.01
    assert len(stats.per_trial) == 50


def test_ball_statistics_extremes():
    empty = ball_statistics_experiment(30, 0.0, trials=2, seed=0)
    assert empty.mean_z == 0.0
    full = ball_statistics_experiment(30, SQRT2, trials=2, seed=0)
    assert full.mean_z == 29.0
