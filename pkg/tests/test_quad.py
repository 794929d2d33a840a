import math

import numpy as np
import pytest
from numpy.testing import assert_allclose

from airydecay.errors import ArgumentError, EvaluationError
from airydecay.quad import (
    BlockKernel,
    QuadratureRule,
    airy_rule,
    composite_gauss_legendre,
    det_minus_one,
    fredholm_det_block,
    fredholm_det_scalar,
    fredholm_series,
    gauss_legendre,
    kernel_trace_product,
    nystrom_matrix,
    truncation_length,
)


def test_gauss_legendre_exactness():
    rule = gauss_legendre(3, 0.0, 2.0)
    assert rule.integrate(rule.nodes ** 5) == pytest.approx(2.0 ** 6 / 6.0, rel=1e-14)
    assert rule.weights.sum() == pytest.approx(2.0)


@pytest.mark.parametrize("n, lower, upper", [(0, 0.0, 1.0), (2, 1.0, 1.0), (2, 1.0, 0.0)])
def test_gauss_legendre_rejects(n, lower, upper):
    with pytest.raises(ArgumentError):
        gauss_legendre(n, lower, upper)


def test_rule_validation():
    with pytest.raises(ArgumentError):
        QuadratureRule(nodes=np.array([0.5, 2.0]), weights=np.array([0.5, 0.5]), domain=(0.0, 1.0))
    with pytest.raises(ArgumentError):
        QuadratureRule(nodes=np.array([0.5, 0.25]), weights=np.array([0.5, 0.5]), domain=(0.0, 1.0))


def test_composite_rule_covers_panels():
    rule = composite_gauss_legendre([0.0, 1.0, 3.0], 4)
    assert len(rule) == 8
    assert rule.weights.sum() == pytest.approx(3.0)
    assert rule.integrate(np.exp(rule.nodes)) == pytest.approx(math.expm1(3.0), rel=1e-6)


def test_truncation_length_is_clipped():
    assert truncation_length(0.0) == 16.0
    assert truncation_length(10.0) == 4.0
    assert truncation_length(-20.0) == 40.0


def test_truncation_length_never_grows_with_threshold():
    lengths = [truncation_length(s) for s in np.linspace(-20.0, 12.0, 129)]
    assert all(a >= b for a, b in zip(lengths, lengths[1:]))


def test_airy_rule_doubles_panels():
    rule = airy_rule(-2.0, 60)
    assert rule.domain == (-2.0, 18.0)
    assert rule.weights.sum() == pytest.approx(20.0)
    # widths 1, 2, 4, 8 and a remainder of 5
    assert len(rule) == 5 * 12


def test_rank_one_determinant():
    rule = gauss_legendre(20, 0.0, 1.0)
    assert fredholm_det_scalar(lambda x, y: 1.5 * x * y, rule) == pytest.approx(0.5, abs=1e-12)


def test_block_determinant_factorises():
    rule = gauss_legendre(16, 0.0, 1.0)

    def diagonal(x, y):
        return 0.3 * np.exp(-(x + y))

    def zero(x, y):
        return np.zeros(np.broadcast(x, y).shape)

    block = BlockKernel(((diagonal, zero), (zero, diagonal)), (0.0, 1.0), (0.0, 1.0))
    assert block.entry(1, 1) is diagonal
    assert fredholm_det_block(block, rule, rule) == pytest.approx(fredholm_det_scalar(diagonal, rule) ** 2, abs=1e-13)


def test_trace_product_of_separable_kernels():
    rule = gauss_legendre(10, 0.0, 1.0)
    # int int (x y)(y x) = (1/3)^2
    assert kernel_trace_product(lambda x, y: x * y, lambda x, y: x * y, rule, rule) == pytest.approx(1.0 / 9.0)


def test_trace_product_of_exponentials():
    rule = composite_gauss_legendre(np.linspace(0.0, 40.0, 41), 10)

    def decaying(x, y):
        return np.exp(-x - y)

    # (int e^{-2x})^2 on the half-line, less a tail of e^{-80}
    assert kernel_trace_product(decaying, decaying, rule, rule) == pytest.approx(0.25, rel=1e-12)


def test_nystrom_reports_bad_samples():
    rule = gauss_legendre(4, 0.0, 1.0)

    def exploding(x, y):
        return np.where(x > 0.5, np.inf, 1.0) + 0.0 * y

    with pytest.raises(EvaluationError) as info:
        nystrom_matrix(exploding, rule, rule)
    assert info.value.node_pair[0] > 0.5


def test_det_minus_one_small_matrix_keeps_relative_accuracy():
    matrix = 1e-20 * np.eye(5)
    assert det_minus_one(matrix) == pytest.approx(-5e-20, rel=1e-12)


def test_det_minus_one_agrees_with_lu():
    rng = np.random.default_rng(4)
    for scale in (0.01, 0.1, 0.9):
        matrix = scale * rng.standard_normal((6, 6)) / 6.0
        assert det_minus_one(matrix) == pytest.approx(np.linalg.det(np.eye(6) - matrix) - 1.0, abs=1e-13)


def test_fredholm_series_elementary_functions():
    matrix = np.diag([0.5, 0.25, 0.125])
    assert_allclose(fredholm_series(matrix, 3), [0.875, 0.21875, 0.015625])
    with pytest.raises(ArgumentError):
        fredholm_series(matrix, 0)
