import logging
import math

import numpy as np
import pytest
from scipy import special

from airydecay.airy1kernel import (
    ExcessSurface,
    calibrate_constants,
    KernelSpec,
    excess_via_factorization,
    joint_F,
    kernel_entries,
    marginal_f,
    norm_bound_K21,
    norm_bound_diagonal,
    remainder_budget_R1,
    remainder_budget_R2,
    remainder_R1,
    remainder_R2,
    resolved_nodes,
    resolvent_bound,
    trace_K12K21,
    trace_asymptotic,
    trace_asymptotic_next,
)
from airydecay.errors import DomainError
from airydecay.quad import BlockKernel, airy_rule, fredholm_det_block, truncation_length


def test_goe_anchor():
    assert marginal_f(0.0) == pytest.approx(0.8319, abs=5e-4)


def test_marginal_is_a_distribution_function():
    values = [marginal_f(s) for s in np.linspace(-6.0, 6.0, 25)]
    assert all(0.0 <= v <= 1.0 for v in values)
    assert all(a <= b for a, b in zip(values, values[1:]))
    assert values[0] < 1e-4
    assert values[-1] > 1.0 - 1e-8


def test_marginal_clamps_far_left(caplog):
    with caplog.at_level(logging.WARNING, logger="airydecay.airy1kernel"):
        assert marginal_f(-13.0) == 0.0
    assert "clamped" in caplog.text

    with pytest.raises(DomainError):
        marginal_f(math.nan)


def test_kernel_spec_validation():
    with pytest.raises(DomainError):
        KernelSpec(u=0.0, s1=0.0, s2=0.0)
    with pytest.raises(DomainError):
        KernelSpec(u=1.0, s1=math.inf, s2=0.0)

    spec = KernelSpec(u=1.0, s1=-1.0, s2=2.0)
    assert spec.swapped() == KernelSpec(u=1.0, s1=2.0, s2=-1.0)


@pytest.mark.parametrize("u, s1, s2", [(0.01, 0.0, 0.0), (9.0, 0.0, 0.0), (1.0, -13.0, 0.0), (1.0, 0.0, 13.0)])
def test_joint_range(u, s1, s2):
    with pytest.raises(DomainError):
        joint_F(KernelSpec(u=u, s1=s1, s2=s2))


def test_kernel_domains_follow_thresholds():
    kernel = kernel_entries(KernelSpec(u=1.0, s1=-2.0, s2=1.0))
    assert kernel.domain1 == (-2.0, 18.0)
    assert kernel.domain2 == (1.0, 15.0)


def test_joint_cdf_between_product_and_min():
    result = joint_F(KernelSpec(u=1.0, s1=0.0, s2=0.5))
    assert result.reliable
    assert result.f1 == pytest.approx(marginal_f(0.0))
    assert result.f2 == pytest.approx(marginal_f(0.5))
    assert result.f1 * result.f2 - result.err_F <= result.F <= min(result.f1, result.f2) + result.err_F
    assert result.excess_E + result.err >= 0.0


def test_conjugation_does_not_change_the_determinant():
    conjugated = joint_F(KernelSpec(u=1.0, s1=0.0, s2=0.5)).F
    plain = joint_F(KernelSpec(u=1.0, s1=0.0, s2=0.5, conjugated=False)).F
    assert conjugated == pytest.approx(plain, abs=1e-10)


def test_time_reversal_symmetry():
    spec = KernelSpec(u=0.7, s1=-1.0, s2=0.5)
    assert joint_F(spec).F == pytest.approx(joint_F(spec.swapped()).F, abs=1e-8)


@pytest.mark.parametrize("u, s1, s2", [(0.5, -1.0, 0.0), (1.0, 0.0, 0.5), (2.0, 1.0, 1.0)])
def test_factorisation_identity(u, s1, s2):
    spec = KernelSpec(u=u, s1=s1, s2=s2)
    result = joint_F(spec)
    assert abs(result.excess_E - excess_via_factorization(spec)) <= 2.0 * result.err


def test_excess_decays_with_separation():
    excesses = [excess_via_factorization(KernelSpec(u=u, s1=0.0, s2=0.0)) for u in (0.25, 0.5, 1.0, 2.0)]
    assert all(e > 0 for e in excesses)
    assert all(a > b for a, b in zip(excesses, excesses[1:]))


def test_surface_matches_factorisation():
    surface = ExcessSurface(1.5)
    spec = KernelSpec(u=1.5, s1=0.5, s2=-0.5)
    assert surface.excess(0.5, -0.5) == pytest.approx(excess_via_factorization(spec), rel=1e-12)
    assert surface.marginal(0.5) == marginal_f(0.5)

    with pytest.raises(DomainError):
        ExcessSurface(10.0)


def test_general_conjugation_keeps_the_determinant():
    spec = KernelSpec(u=1.0, s1=0.0, s2=0.5)
    kernel = kernel_entries(spec)
    scales = (lambda x: 1.0 + np.exp(0.3 * x), lambda x: np.exp(spec.u * x + spec.u ** 3 / 3.0))

    def conjugated(i, j):
        entry = kernel.entry(i + 1, j + 1)
        return lambda x, y: scales[i](x) * entry(x, y) / scales[j](y)

    rescaled = BlockKernel(
        tuple(tuple(conjugated(i, j) for j in range(2)) for i in range(2)), kernel.domain1, kernel.domain2
    )
    rule1 = airy_rule(spec.s1, 60, truncation_length(spec.s1))
    rule2 = airy_rule(spec.s2, 60, truncation_length(spec.s2))
    assert fredholm_det_block(rescaled, rule1, rule2) == pytest.approx(fredholm_det_block(kernel, rule1, rule2), rel=1e-8)


def test_unconjugated_k21_entry():
    u = 2.0
    kernel = kernel_entries(KernelSpec(u=u, s1=0.0, s2=0.0, conjugated=False))
    value = kernel.entry(2, 1)(np.array([1.0]), np.array([1.0]))[0]
    # Ai(1 + 1 + u^2) e^{-(1 + 1) u - (2/3) u^3}
    assert float(value) * math.exp(2.0 * u + (2.0 / 3.0) * u ** 3) == pytest.approx(special.airy(6.0)[0], rel=1e-12)


@pytest.mark.parametrize("s", [-4.0, 0.0, 3.0])
def test_marginal_converges_under_node_doubling(s):
    assert marginal_f(s, 60) == pytest.approx(marginal_f(s, 120), abs=1e-8)


def test_joint_cdf_converges_under_node_doubling():
    spec = KernelSpec(u=1.0, s1=0.0, s2=0.5)
    assert joint_F(spec, n=60).F == pytest.approx(joint_F(spec, n=120).F, abs=1e-7)


def test_longer_truncation_stays_within_error():
    spec = KernelSpec(u=1.0, s1=0.0, s2=0.5)
    kernel = kernel_entries(spec)
    default = fredholm_det_block(
        kernel, airy_rule(spec.s1, 60, truncation_length(spec.s1)), airy_rule(spec.s2, 60, truncation_length(spec.s2))
    )
    extended = fredholm_det_block(
        kernel,
        airy_rule(spec.s1, 60, truncation_length(spec.s1) + 5.0),
        airy_rule(spec.s2, 60, truncation_length(spec.s2) + 5.0),
    )
    assert abs(extended - default) < joint_F(spec).err


def test_resolved_nodes_follow_heat_width():
    assert resolved_nodes(0.05, 60) == 190
    assert resolved_nodes(0.1, 60) == 135
    assert resolved_nodes(0.5, 60) == 60
    assert resolved_nodes(1.0, 60) == 60
    assert ExcessSurface(0.05).joint_n == 190


def test_joint_cdf_at_small_separation():
    spec = KernelSpec(u=0.1, s1=0.0, s2=0.5)
    result = joint_F(spec)
    assert result.reliable
    assert result.err < 0.05
    assert result.excess_E + result.err >= 0.0
    assert result.F <= min(result.f1, result.f2) + result.err_F
    # strongly correlated at this separation
    assert result.excess_E > excess_via_factorization(KernelSpec(u=1.0, s1=0.0, s2=0.5))


def test_trace_approaches_leading_asymptotic():
    gaps = []
    for u in (3.0, 4.0, 5.0):
        leading = trace_asymptotic(u, 1.0, 1.0)
        assert leading.sign == -1
        assert leading.in_window
        gaps.append(abs(trace_K12K21(KernelSpec(u=u, s1=1.0, s2=1.0)) / leading.value - 1.0))
    assert gaps[0] > gaps[1] > gaps[2]


def test_trace_asymptotic_flags_window(caplog):
    with caplog.at_level(logging.WARNING, logger="airydecay.airy1kernel"):
        outside = trace_asymptotic(1.0, 2.0, 0.5)
    assert not outside.in_window
    assert trace_asymptotic(2.0, 0.0, 1.0).value == 0.0
    with pytest.raises(DomainError):
        trace_asymptotic(0.0, 1.0, 1.0)


def test_next_order_terms_sum_to_leading():
    u, s1, s2 = 4.0, 0.5, 1.0
    airy_term, heat_term = trace_asymptotic_next(u, s1, s2)
    total = airy_term.value + heat_term.value
    assert total == pytest.approx(trace_asymptotic(u, s1, s2).value, rel=1e-12)


def test_remainder_budgets():
    r1 = remainder_budget_R1(2.0, 0.5, 1.0)
    assert r1.sign == 1
    assert r1.log_abs == pytest.approx(math.log(10.0) - 0.5 - 2.0 * math.log(2.0) - (4.0 / 3.0) * 8.0 - 6.0)
    assert remainder_budget_R2(8.0, 0.0, 0.0).log_abs < -1000

    with pytest.raises(DomainError):
        remainder_budget_R1(2.0, -0.5, 1.0)
    with pytest.raises(DomainError):
        remainder_budget_R1(1.0, 2.0, 2.0)


def test_norm_bounds():
    assert norm_bound_diagonal(0.0) == 0.5
    assert norm_bound_K21(1.0, 0.0, 0.0).log_abs == pytest.approx(-4.0 / 3.0 - math.log(2.0))
    with pytest.raises(DomainError):
        norm_bound_diagonal(-1.0)
    with pytest.raises(DomainError):
        norm_bound_K21(1.0, -1.0, 0.0)


def test_marginal_far_right():
    assert 1.0 - 1e-10 < marginal_f(8.0) <= 1.0


def test_independence_at_large_separation():
    result = joint_F(KernelSpec(u=6.0, s1=0.0, s2=0.0))
    assert result.F == pytest.approx(marginal_f(0.0) ** 2, abs=1e-6)
    assert abs(result.excess_E) < 1e-6


def test_trace_asymptotic_is_symmetric():
    assert trace_asymptotic(4.0, 0.5, 1.5) == trace_asymptotic(4.0, 1.5, 0.5)


def test_remainder_budget_examples():
    assert remainder_budget_R1(2.0, 1.0, 1.0).log_abs == pytest.approx(math.log(10.0) - 1.0 - math.log(4.0) - 32.0 / 3.0 - 8.0)
    assert remainder_budget_R2(2.0, 0.0, 0.0).log_abs == pytest.approx(math.log(10.0) - 6.0 * math.log(2.0) - 64.0 / 3.0)
    budgets = [remainder_budget_R1(u, 1.0, 1.0).log_abs for u in (1.5, 2.0, 3.0)]
    assert budgets[0] > budgets[1] > budgets[2]


def test_resolvent_bound():
    assert resolvent_bound(0.0) == 2.0
    with pytest.raises(DomainError):
        resolvent_bound(-0.5)


def test_calibrated_constants_dominate_measured_remainders():
    u_values, s_values = (1.0, 2.0), (0.0, 1.0)
    c2, c = calibrate_constants(u_values, s_values, safety=1.0)
    assert c2 > 0 and c > 0

    for u in u_values:
        for s1 in s_values:
            for s2 in s_values:
                measured = abs(remainder_R2(KernelSpec(u, s1, s2)))
                if measured > 0:
                    assert math.log(measured) <= remainder_budget_R2(u, s1, s2, c).log_abs + 1e-9


def test_resolvent_remainder_is_a_correction():
    spec = KernelSpec(u=2.0, s1=1.0, s2=1.0)
    r1 = remainder_R1(spec)
    assert math.isfinite(r1)
    assert abs(r1) < abs(excess_via_factorization(spec))
