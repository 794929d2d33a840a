import math

import numpy as np
import pytest

from airydecay.cli.acceptance import brute_force_passage
from airydecay.errors import ArgumentError, StateError
from airydecay.lpp import (
    PassageField,
    geodesic_line,
    jackknife_stderr,
    mc_cov_star,
    mc_cross_check,
    mc_exceedance,
    mc_line_mean,
    mc_passage_mean,
    mc_variance_star,
    one_point_ks,
    passage_line,
    passage_point,
    rescale_star,
    sample_field,
    sample_star,
    star_offset,
    wilson_interval,
)
from airydecay.lpp import kernels, montecarlo
from airydecay.lpp.montecarlo import sample_covariance


def test_fields_are_reproducible():
    first = sample_field(40, seed=11)
    second = sample_field(40, seed=11)
    other = sample_field(40, seed=12)
    assert np.array_equal(first.weights, second.weights)
    assert not np.array_equal(first.weights, other.weights)


def test_weights_look_exponential():
    weights = sample_field(200, seed=1).weights
    assert np.all(weights > 0)
    assert weights.mean() == pytest.approx(1.0, abs=0.03)
    assert weights.var() == pytest.approx(1.0, abs=0.1)


def test_streamed_field_agrees_with_retained():
    retained = sample_field(30, seed=5)
    streamed = sample_field(30, seed=5, retain=False)
    assert not streamed.retained
    assert streamed.weight((3, 7)) == retained.weight((3, 7))
    assert passage_point(streamed, (2, 1), (25, 28)) == passage_point(retained, (2, 1), (25, 28))
    assert passage_line(streamed, (1, 2), 29) == passage_line(retained, (1, 2), 29)


@pytest.mark.parametrize("n, seed", [(0, 1), (4001, 1), (10, -1), (10, 2 ** 63), (10, 1.5)])
def test_sample_field_rejects(n, seed):
    with pytest.raises(ArgumentError):
        sample_field(n, seed)


def test_from_weights_validation():
    with pytest.raises(ArgumentError):
        PassageField.from_weights(np.ones((2, 3)))
    with pytest.raises(ArgumentError):
        PassageField.from_weights([[1.0, 0.0], [1.0, 1.0]])


def test_dynamic_programming_matches_enumeration():
    rng = np.random.default_rng(8)
    for _ in range(20):
        field = PassageField.from_weights(rng.exponential(size=(5, 5)))
        assert passage_point(field, (0, 0), (4, 4)) == brute_force_passage(field.weights, (0, 0), (4, 4))
        assert passage_point(field, (1, 2), (3, 4)) == brute_force_passage(field.weights, (1, 2), (3, 4))


def test_passage_point_on_small_grid():
    field = PassageField.from_weights([[1.0, 5.0], [2.0, 1.0]])
    # paths (0,0)->(0,1)->(1,1) = 7 and (0,0)->(1,0)->(1,1) = 4
    assert passage_point(field, (0, 0), (1, 1)) == 7.0
    assert passage_point(field, (1, 0), (1, 0)) == 2.0

    with pytest.raises(ArgumentError):
        passage_point(field, (1, 1), (0, 1))
    with pytest.raises(ArgumentError):
        passage_point(field, (0, 0), (2, 0))


def test_line_limits():
    retained = sample_field(10, seed=2)
    streamed = sample_field(10, seed=2, retain=False)
    passage_line(retained, (0, 0), 18)
    with pytest.raises(ArgumentError):
        passage_line(streamed, (0, 0), 10)
    with pytest.raises(ArgumentError):
        passage_line(retained, (3, 3), 5)


def test_geodesic_attains_line_passage_time():
    field = sample_field(40, seed=9)
    path = geodesic_line(field, (2, 3), 50)
    assert path.start == (2, 3)
    assert sum(path.end) == 50
    assert len(path) == 50 - 5 + 1
    steps = np.diff(path.points, axis=0)
    assert np.all((steps == [1, 0]).all(axis=1) | (steps == [0, 1]).all(axis=1))
    assert path.value == passage_line(field, (2, 3), 50)
    assert np.array_equal(path.times(), np.arange(5, 51))


def test_geodesic_breaks_ties_downward():
    weights = np.ones((3, 3))
    weights[1, 1] = 10.0
    field = PassageField.from_weights(weights)
    path = geodesic_line(field, (0, 0), 2)
    # both predecessors of (1, 1) are worth 2, the tie goes to (1, 0)
    assert path.ties == 1
    assert path.tie_break == "e2"
    assert [tuple(p) for p in path.points] == [(0, 0), (1, 0), (1, 1)]
    assert path.value == 12.0
    assert np.array_equal(path.positions(), [0.0, 0.5, 0.0])
    assert (1, 0) in path.cells()


def test_geodesic_needs_retained_weights():
    with pytest.raises(StateError):
        geodesic_line(sample_field(10, seed=1, retain=False), (0, 0), 5)


def test_rescaling():
    assert rescale_star(400.0, 100) == 0.0
    assert np.allclose(rescale_star(np.array([400.0, 400.0 + 2.0 ** (4 / 3) * 100 ** (1 / 3)]), 100), [0.0, 1.0])
    with pytest.raises(ArgumentError):
        rescale_star(1.0, 0)

    assert star_offset(100, 1.0) == 34
    assert star_offset(100, 0.0) == 0
    with pytest.raises(ArgumentError):
        star_offset(100, -0.5)


def test_small_passage_mean():
    # L = w(0,0) + w(1,1) + max(w(1,0), w(0,1)) has mean 3.5 and variance 3.25
    n_samples = 20000
    summary = mc_passage_mean((0, 0), (1, 1), n_samples, seed=3)
    assert summary.n_samples == n_samples
    assert summary.mean == pytest.approx(3.5, abs=4.0 * math.sqrt(3.25 / n_samples))
    assert summary.stderr == pytest.approx(math.sqrt(3.25 / n_samples), rel=0.1)


def test_sample_covariance():
    rng = np.random.default_rng(1)
    a, b = rng.standard_normal(100), rng.standard_normal(100)
    assert sample_covariance(a, b) == pytest.approx(np.cov(a, b)[0, 1])


def test_jackknife_of_a_mean():
    samples = np.random.default_rng(2).standard_normal(10000)
    expected = samples.std(ddof=1) / math.sqrt(samples.size)
    assert jackknife_stderr(np.mean, samples) == pytest.approx(expected, rel=0.2)


def test_wilson_interval():
    lo, hi = wilson_interval(0, 10)
    assert lo == pytest.approx(0.0, abs=1e-12)
    assert 0.0 < hi < 0.35
    lo, hi = wilson_interval(5, 10)
    assert lo == pytest.approx(1.0 - hi)
    with pytest.raises(ArgumentError):
        wilson_interval(1, 0)
    with pytest.raises(ArgumentError):
        wilson_interval(1, 10, confidence=1.0)


def test_zero_separation_covariance_is_the_variance():
    cov = mc_cov_star(10, 0.0, 200, seed=4)
    variance = mc_variance_star(10, 200, seed=4)
    assert cov.mean == variance.mean
    assert cov.mean > 0
    assert cov.stderr > 0


def test_covariance_needs_enough_samples():
    with pytest.raises(ArgumentError):
        mc_cov_star(10, 1.0, 50, seed=0)
    with pytest.raises(ArgumentError):
        mc_cov_star(0, 1.0, 200, seed=0)


def test_star_samples_are_reproducible():
    assert np.array_equal(sample_star(8, 50, seed=6), sample_star(8, 50, seed=6))


@pytest.mark.parametrize("kind, value", [
    ("sup_transversal", 0.5),
    ("endpoint", 0.0),
    ("coalescence", 1.0),
    ("lower_tail_pp", 0.5),
    ("upper_tail_line", 0.0),
    ("interval_to_line", 0.0),
])
def test_exceedance_summaries(kind, value):
    summary = mc_exceedance(kind, 20, value, 200, seed=7)
    assert summary.estimand == kind
    assert 0.0 <= summary.lo <= summary.mean <= summary.hi <= 1.0
    assert mc_exceedance(kind, 20, value, 200, seed=7) == summary


def test_exceedance_validation():
    with pytest.raises(ArgumentError):
        mc_exceedance("nonsense", 20, 1.0, 200, seed=0)
    with pytest.raises(ArgumentError):
        mc_exceedance("coalescence", 10, 0.01, 200, seed=0)
    with pytest.raises(ArgumentError):
        mc_exceedance("sup_transversal", 2001, 1.0, 200, seed=0)
    with pytest.raises(ArgumentError):
        mc_exceedance("endpoint", 20, -1.0, 200, seed=0)


@pytest.mark.slow
def test_one_point_distribution_transfers():
    result = one_point_ks(200, 4000, seed=10)
    assert result.statistic < 0.1


@pytest.mark.slow
def test_localisation_probability_decreases():
    means = [mc_exceedance("sup_transversal", 100, u, 4000, seed=12).mean for u in (0.4, 0.8, 1.2)]
    assert means[0] > means[1] > means[2]


def test_deterministic_field_examples():
    field = PassageField.from_weights(np.ones((3, 3)))
    assert passage_point(field, (0, 0), (1, 1)) == 3.0
    assert passage_line(field, (0, 0), 1) == 2.0


def test_line_dominates_diagonal_point():
    for seed in range(10):
        field = sample_field(20, seed=seed)
        assert passage_line(field, (0, 0), 20) >= passage_point(field, (0, 0), (10, 10))


def test_raising_a_weight_never_lowers_passage_times():
    rng = np.random.default_rng(13)
    for _ in range(10):
        weights = rng.exponential(size=(6, 6))
        before = passage_point(PassageField.from_weights(weights), (0, 0), (5, 5))
        x, y = rng.integers(0, 6, size=2)
        weights[x, y] += rng.exponential()
        assert passage_point(PassageField.from_weights(weights), (0, 0), (5, 5)) >= before


def test_positions_move_by_half_steps():
    path = geodesic_line(sample_field(30, seed=4), (0, 0), 40)
    assert np.all(np.abs(np.diff(path.positions())) == 0.5)


def test_geodesics_coalesce_into_a_common_suffix():
    for replicate in range(20):
        left = kernels.line_geodesic(1, replicate, 0, 0, 60)[1]
        right = kernels.line_geodesic(1, replicate, 6, 0, 60)[1]
        shared = np.flatnonzero(left == right)
        if shared.size:
            assert np.array_equal(shared, np.arange(shared[0], 61))
        assert np.all(left <= right)


def test_streamed_geodesic_matches_retained():
    field = sample_field(30, seed=0)
    value, xs, _ = kernels.line_geodesic(0, 0, 0, 0, 29)
    path = geodesic_line(field, (0, 0), 29)
    assert value == path.value
    assert np.array_equal(xs, path.points[:, 0])


def test_cross_check_scales_the_limit(monkeypatch):
    class Fixed:
        cov = 0.3

    arguments = []

    def fake_cov(u):
        arguments.append(u)
        return Fixed()

    monkeypatch.setattr(montecarlo, "hoeffding_cov", fake_cov)
    lhs, rhs = mc_cross_check(10, 1.0, 200, seed=2)
    assert arguments == [pytest.approx(2.0 ** (-2.0 / 3.0))]
    assert rhs == pytest.approx(2.0 ** (2.0 / 3.0) * 0.3)
    assert lhs.estimand == "cov"


def test_rescaling_arithmetic():
    assert rescale_star(4040.0, 1000) == pytest.approx(40.0 / (2.0 ** (4.0 / 3.0) * 10.0))


def test_line_mean_of_two_cells():
    # 1 + E max(Exp, Exp)
    summary = mc_line_mean((0, 0), 1, 20000, seed=5)
    assert summary.mean == pytest.approx(2.5, abs=4.0 * summary.stderr)
