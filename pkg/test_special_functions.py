"""
正态基础函数测试
"""
import math

import numpy as np
import pytest
from hypothesis import given, seed
from hypothesis import strategies as st
from scipy import stats

from special_functions import (
    INV_SQRT_2PI, QuadratureError, gauss_tail_integral, mills_scaled, normal_pdf, normal_sf,
)

LEMMA_GRID = [0.1 * k for k in range(1, 501)]
MILLS_LAMBDAS = [0.0, 0.5, 1.0, 2.0, 5.0, 10.0, 20.0, 50.0]


def test_normal_pdf_values():
    assert normal_pdf(0.0) == pytest.approx(0.3989422804014327, rel=1e-15)
    assert normal_pdf(1.0) == pytest.approx(0.24197072451914337, rel=1e-14)
    assert normal_pdf(-2.5) == normal_pdf(2.5)


def test_normal_sf_values():
    assert normal_sf(0.0) == 0.5
    assert normal_sf(1.0) == pytest.approx(0.15865525393145705, rel=1e-12)


def _tail_series(x):
    return normal_pdf(x) / x * (1 - 1 / x ** 2 + 3 / x ** 4 - 15 / x ** 6 + 105 / x ** 8)


def test_normal_sf_far_tail_stays_positive():
    # 38 处的上尾是次正规数 2.9e-316，不能下溢为 0
    assert 0.0 < normal_sf(38.0) < 1e-300
    assert normal_sf(38.0) == pytest.approx(_tail_series(38.0), rel=1e-6)
    assert normal_sf(40.0) >= 0.0


@pytest.mark.parametrize('x', [36.9, 37.0, 37.0001, 37.5])
def test_normal_sf_continuous_across_erfc_cutoff(x):
    assert normal_sf(x) == pytest.approx(_tail_series(x), rel=1e-10)


def test_normal_sf_tail_relative_accuracy():
    # 与 Mills 比的渐近展开对照：1-Φ(x) ≈ φ(x)/x·(1 - 1/x² + 3/x⁴ - 15/x⁶)
    assert normal_sf(30.0) == pytest.approx(_tail_series(30.0), rel=1e-10)


@pytest.mark.parametrize('x', np.linspace(0.0, 8.0, 33).tolist())
def test_normal_sf_symmetry(x):
    assert abs(normal_sf(x) + normal_sf(-x) - 1.0) <= 1e-14


def test_mills_scaled_values():
    assert mills_scaled(0.0) == 0.5
    assert mills_scaled(1.0) == pytest.approx(math.exp(0.5) * stats.norm.sf(1.0), rel=1e-12)
    assert mills_scaled(1.0) == pytest.approx(0.26157829186512344, rel=1e-12)


def test_mills_scaled_bracketed_at_50():
    # φ(50)/50·e^{1250} = 1/(50√(2π))
    upper = INV_SQRT_2PI / 50.0
    lower = upper * (1.0 - 1.0 / 2500.0)
    assert lower <= mills_scaled(50.0) <= upper


def test_mills_scaled_no_overflow_for_huge_x():
    x = 1e6
    value = mills_scaled(x)
    assert math.isfinite(value)
    assert value == pytest.approx(INV_SQRT_2PI / x, rel=1e-11)


def test_mills_scaled_decreasing():
    grid = np.linspace(-5.0, 50.0, 1101)
    values = [mills_scaled(x) for x in grid]
    assert all(a > b for a, b in zip(values, values[1:]))
    assert all(0.0 < v <= 0.5 for v, x in zip(values, grid) if x >= 0)


def test_gaussian_tail_estimate_grid():
    """|x·h(x) - 1/√(2π)| ≤ (2/√(2π))/x²"""
    for x in LEMMA_GRID:
        assert abs(x * mills_scaled(x) - INV_SQRT_2PI) <= 2.0 * INV_SQRT_2PI / (x * x)


def test_gaussian_tail_lower_bound_grid():
    # 1-Φ(x) > φ(0)·x/(x²+1)·e^{-x²/2}，两边乘以 e^{x²/2} 后比较
    for x in LEMMA_GRID:
        assert mills_scaled(x) > INV_SQRT_2PI * x / (x * x + 1.0)


def test_gaussian_tail_lower_bound_unscaled_where_representable():
    for x in [0.1 * k for k in range(1, 301)]:
        assert normal_sf(x) > INV_SQRT_2PI * x / (x * x + 1.0) * math.exp(-0.5 * x * x)


@pytest.mark.parametrize('lam', MILLS_LAMBDAS)
def test_mills_identity(lam):
    assert abs(mills_scaled(lam) - gauss_tail_integral(lam, 1e-12)) <= 1e-10


def test_gauss_tail_integral_at_zero():
    assert gauss_tail_integral(0.0, 1e-12) == pytest.approx(0.5, abs=1e-12)


def test_gauss_tail_integral_rejects_bad_arguments():
    with pytest.raises(ValueError):
        gauss_tail_integral(-1.0)
    with pytest.raises(ValueError):
        gauss_tail_integral(1.0, tol=0.0)


def test_gauss_tail_integral_reports_unreachable_tolerance():
    with pytest.raises(QuadratureError):
        gauss_tail_integral(1.0, tol=1e-300)


@seed(7)
@given(st.floats(min_value=-30.0, max_value=30.0))
def test_mills_matches_definition_where_representable(x):
    expected = math.exp(0.5 * x * x) * normal_sf(x)
    assert mills_scaled(x) == pytest.approx(expected, rel=1e-12)
