import math

import numpy as np
import pytest
from scipy import stats

from airydecay.covariance import (
    CovarianceEstimate,
    airy1_variance,
    bound_envelope_check,
    cov_sweep,
    decay_exponent_fit,
    fit_envelope_constants,
    hoeffding_cov,
    lower_window_cov,
)
from airydecay.errors import ArgumentError, DomainError, UnreliableEstimateError

# Var of GOE Tracy-Widom, divided by 4 for the Airy1 normalisation
AIRY1_VARIANCE = 1.6077810345 / 4.0


def normal_comonotone(s1, s2):
    cdf = stats.norm.cdf
    return cdf(min(s1, s2)) / (cdf(s1) * cdf(s2)) - 1.0


def test_hooks_recover_a_known_variance():
    estimate = hoeffding_cov(
        1.0,
        s_window=(-8.0, 8.0),
        marginal=stats.norm.cdf,
        excess=normal_comonotone,
        split_diagonal=True,
    )
    assert estimate.regime == "determinant"
    assert estimate.sign == 1
    assert estimate.cov == pytest.approx(1.0, abs=1e-4)
    assert estimate.reliable
    assert estimate.tail_budget < 1e-10


def test_independent_hooks_give_zero():
    estimate = hoeffding_cov(5.0, s_window=(-4.0, 4.0), grid_n=16, marginal=stats.norm.cdf, excess=lambda s1, s2: 0.0)
    # hooks bypass the large-u shortcut
    assert estimate.regime == "determinant"
    assert estimate.sign == 0
    assert estimate.cov == 0.0
    assert estimate.log_cov == -math.inf


def test_airy1_variance():
    estimate = airy1_variance()
    assert estimate.regime == "comonotone"
    assert estimate.u == 0.0
    assert estimate.cov == pytest.approx(AIRY1_VARIANCE, abs=5e-3)
    assert estimate.tail_budget < 1e-2
    assert estimate.window == (-10.0, 6.0)


def test_asymptotic_regime():
    u = 4.0
    estimate = hoeffding_cov(u, s_window=(-4.0, 6.0), grid_n=16)
    assert estimate.regime == "asymptotic"
    assert estimate.sign == 1
    assert estimate.window == (-4.0, 6.0)
    assert -(4.0 / 3.0) * u ** 3 - 30.0 < estimate.log_cov < -(4.0 / 3.0) * u ** 3 + 30.0
    assert estimate.cov == 0.0 or estimate.cov < 1e-20
    # the one-point tails below -4 dwarf a covariance this small
    assert estimate.log_tail_budget > estimate.log_cov


def test_asymptotic_regime_counts_negative_thresholds():
    u = 4.0
    quadrant = hoeffding_cov(u, s_window=(0.0, 6.0), grid_n=16)
    full = hoeffding_cov(u, s_window=(-4.0, 6.0), grid_n=16)
    assert quadrant.window == (0.0, 6.0)
    assert quadrant.sign == full.sign == 1
    assert full.log_cov > quadrant.log_cov


@pytest.mark.parametrize("u", [0.01, 8.5, math.nan])
def test_rejects_separation(u):
    with pytest.raises(DomainError):
        hoeffding_cov(u)


@pytest.mark.parametrize("window, grid_n", [((2.0, 1.0), 64), ((-13.0, 6.0), 64), ((-10.0, 6.0), 8)])
def test_rejects_window(window, grid_n):
    with pytest.raises(ArgumentError):
        hoeffding_cov(1.0, s_window=window, grid_n=grid_n)


def test_lower_window_range():
    with pytest.raises(DomainError):
        lower_window_cov(1.0)
    with pytest.raises(ArgumentError):
        lower_window_cov(2.0, grid_n=4)


def test_estimate_properties():
    estimate = CovarianceEstimate(
        u=1.0,
        log_cov=math.log(0.25),
        sign=-1,
        window=(-1.0, 2.0),
        log_tail_budget=math.log(1e-3),
        log_quad_err=math.log(1e-6),
        regime="determinant",
        grid_n=64,
        reliable=True,
    )
    assert estimate.cov == pytest.approx(-0.25)
    assert estimate.tail_budget == pytest.approx(1e-3)
    assert estimate.quad_err == pytest.approx(1e-6)
    assert (estimate.alpha, estimate.beta) == (-1.0, 2.0)
    assert not estimate.restricted


def test_decay_fit_on_pure_power():
    u_values = (1.2, 1.6, 2.0, 2.4)
    fit = decay_exponent_fit(u_values, [-(u ** 3) for u in u_values], reliable=[True] * 4)
    assert fit.delta == pytest.approx(3.0)
    assert fit.intercept == pytest.approx(0.0, abs=1e-12)
    assert np.allclose(fit.residuals, 0.0, atol=1e-12)


def _estimate(u, log_cov, reliable=True, sign=1):
    return CovarianceEstimate(
        u=u,
        log_cov=log_cov,
        sign=sign,
        window=(-10.0, 6.0),
        log_tail_budget=-100.0,
        log_quad_err=log_cov - 5.0,
        regime="determinant",
        grid_n=64,
        reliable=reliable,
    )


def test_decay_fit_from_estimates():
    u_values = (3.0, 3.5, 4.0, 4.5)
    fit = decay_exponent_fit(u_values, [_estimate(u, -2.0 * u ** 2.5) for u in u_values])
    assert fit.delta == pytest.approx(2.5)


def test_decay_fit_rejects_bad_input():
    with pytest.raises(ArgumentError):
        decay_exponent_fit((1.2, 1.6, 2.0), [-1.0, -2.0, -3.0], reliable=[True] * 3)

    with pytest.raises(UnreliableEstimateError) as info:
        decay_exponent_fit((1.2, 1.6, 2.0, 2.4), [-1.0, 0.5, -3.0, -math.inf], reliable=[True] * 4)
    assert info.value.offending == [1.6, 2.4]


def test_decay_fit_needs_reliability_for_plain_values():
    u_values = (3.0, 3.5, 4.0, 4.5)
    log_covs = [-(u ** 3) for u in u_values]
    with pytest.raises(ArgumentError):
        decay_exponent_fit(u_values, log_covs)

    with pytest.raises(UnreliableEstimateError) as info:
        decay_exponent_fit(u_values, log_covs, reliable=[True, False, True, True])
    assert info.value.offending == [3.5]


def test_decay_fit_refuses_flagged_estimates():
    u_values = (3.0, 3.5, 4.0, 4.5)
    estimates = [_estimate(u, -(u ** 3)) for u in u_values]
    estimates[2] = _estimate(4.0, -64.0, reliable=False)
    estimates[3] = _estimate(4.5, -91.0, sign=-1)
    with pytest.raises(UnreliableEstimateError) as info:
        decay_exponent_fit(u_values, estimates)
    assert info.value.offending == [4.0, 4.5]

    with pytest.raises(ArgumentError):
        decay_exponent_fit((3.0, 3.5, 4.0, 5.0), [_estimate(u, -(u ** 3)) for u in u_values])


def test_envelope_constants_make_every_point_pass():
    u_values = (1.5, 2.0, 2.5)
    log_covs = [-(4.0 / 3.0) * u ** 3 - 0.5 * u for u in u_values]
    c, c_prime = fit_envelope_constants(u_values, log_covs)
    assert c > 0 and c_prime > 0
    assert all(bound_envelope_check(u, None, c, c_prime, log_cov=l) for u, l in zip(u_values, log_covs))
    assert not bound_envelope_check(2.0, 0.0, c, c_prime)

    with pytest.raises(DomainError):
        bound_envelope_check(1.0, 0.1, 1.0, 1.0)
    with pytest.raises(ArgumentError):
        fit_envelope_constants(u_values, log_covs[:2])


@pytest.mark.slow
def test_covariance_below_variance_and_decreasing():
    variance = airy1_variance(grid_n=32).cov
    near = hoeffding_cov(0.5, grid_n=32)
    far = hoeffding_cov(1.5, grid_n=32)
    assert 0 < far.cov < near.cov < variance
    assert near.tail_budget < 1e-2


@pytest.mark.slow
def test_lower_window_bounds_full_covariance():
    bound = lower_window_cov(1.5, grid_n=16)
    assert bound.restricted
    assert bound.window == pytest.approx((3.0 * math.log(1.5), 3.0 * math.log(1.5) + 1.0))
    assert bound.reliable
    assert bound.cov <= hoeffding_cov(1.5, grid_n=32).cov


@pytest.mark.slow
def test_sweep_decreases_across_the_regime_switch():
    estimates = cov_sweep([2.6, 3.0, 3.4], s_window=(-8.0, 6.0), grid_n=32)
    assert [e.regime for e in estimates] == ["determinant", "determinant", "asymptotic"]
    logs = [e.log_cov for e in estimates]
    assert all(e.sign == 1 for e in estimates)
    assert logs[0] > logs[1] > logs[2]
    # -ln cov grows faster than u itself
    assert logs[2] / logs[1] > 3.4 / 3.0
    assert logs[1] / logs[0] > 3.0 / 2.6


@pytest.mark.slow
def test_lower_window_is_far_below_the_covariance():
    bound = lower_window_cov(2.5, grid_n=16)
    assert bound.reliable
    assert -70.0 < bound.log_cov < -50.0
    assert bound.log_cov < -37.0
