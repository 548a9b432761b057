"""
条件 CGF 测试
"""
import math

import numpy as np
import pytest
from hypothesis import given, seed
from hypothesis import strategies as st
from numpy.testing import assert_allclose

from cgf import (
    DomainError, FiniteSupportCgf, PooledCgf, SignFlipCgf, finite_support_eval, finite_support_higher_at_zero,
    logcosh, pooled_eval, signflip_eval, signflip_higher_at_zero, tilted_atoms, tilted_moments,
)

RNG_SEED = 20240601
S_GRID = np.linspace(-1.99, 1.99, 41).tolist()


def _random_atoms(rng, k):
    values = rng.uniform(-3.0, 3.0, size=k)
    probs = rng.uniform(0.05, 1.0, size=k)
    probs = probs / probs.sum()
    values = values - math.fsum(probs * values)
    return tuple(zip(values.tolist(), probs.tolist()))


def test_logcosh_values():
    assert logcosh(0.0) == 0.0
    assert logcosh(1000.0) == pytest.approx(999.3068528194400547, rel=1e-15)
    assert logcosh(1.0) == pytest.approx(0.4337808304830272, rel=1e-14)
    assert logcosh(-1.0) == logcosh(1.0)


def test_logcosh_small_argument_keeps_relative_precision():
    y = 1e-10
    assert logcosh(y) == pytest.approx(0.5 * y * y, rel=1e-12)


def test_signflip_eval_examples():
    ev = signflip_eval(SignFlipCgf(1.0), 0.0)
    assert (ev.k, ev.k1, ev.k2) == (0.0, 0.0, 1.0)
    assert signflip_eval(SignFlipCgf(2.0), 0.5).k1 == pytest.approx(1.5231883, abs=1e-7)
    c = SignFlipCgf(3.0)
    assert signflip_eval(c, -0.5).k1 == -signflip_eval(c, 0.5).k1


def test_signflip_eval_large_argument_does_not_overflow():
    ev = signflip_eval(SignFlipCgf(1e6), 1.5)
    assert ev.k == pytest.approx(1.5e6 - math.log(2.0), rel=1e-15)
    assert ev.k1 == 1e6
    assert ev.k2 == 0.0


def test_signflip_eval_rejects_outside_domain():
    c = SignFlipCgf(1.0)
    with pytest.raises(DomainError):
        signflip_eval(c, 2.0)
    with pytest.raises(DomainError):
        signflip_eval(c, -2.5)
    with pytest.raises(DomainError):
        signflip_eval(c, math.nan)


def test_signflip_higher_at_zero_examples():
    assert signflip_higher_at_zero(SignFlipCgf(1.0)) == (0.0, -2.0)
    assert signflip_higher_at_zero(SignFlipCgf(0.0)) == (0.0, 0.0)
    assert signflip_higher_at_zero(SignFlipCgf(2.0)) == (0.0, -32.0)


def test_finite_support_matches_signflip():
    rademacher = FiniteSupportCgf(((1.0, 0.5), (-1.0, 0.5)))
    a = finite_support_eval(rademacher, 0.3)
    b = signflip_eval(SignFlipCgf(1.0), 0.3)
    assert a.k == pytest.approx(b.k, abs=1e-14)
    assert a.k1 == pytest.approx(b.k1, abs=1e-14)
    assert a.k2 == pytest.approx(b.k2, abs=1e-14)


def test_finite_support_examples_at_zero():
    ev = finite_support_eval(FiniteSupportCgf(((-1.0, 0.25), (0.0, 0.5), (1.0, 0.25))), 0.0)
    assert ev.k == pytest.approx(0.0, abs=1e-15)
    assert ev.k1 == pytest.approx(0.0, abs=1e-15)
    assert ev.k2 == pytest.approx(0.5, rel=1e-15)
    ev = finite_support_eval(FiniteSupportCgf(((2.0, 0.5), (-2.0, 0.5))), 0.0)
    assert ev.k2 == pytest.approx(4.0, rel=1e-15)


def test_finite_support_large_tilt_is_stable():
    c = FiniteSupportCgf(((400.0, 0.5), (-400.0, 0.5)))
    ev = finite_support_eval(c, 1.9)
    assert math.isfinite(ev.k)
    assert ev.k == pytest.approx(760.0 - math.log(2.0), rel=1e-14)


@pytest.mark.parametrize('atoms, message', [
    ((), '至少'),
    (((1.0, 0.6), (-1.0, 0.6)), '之和'),
    (((1.0, 0.5), (0.0, 0.5)), '均值'),
    (((1.0, 1.5), (-1.0, -0.5)), '为正'),
])
def test_finite_support_rejects_invalid_atoms(atoms, message):
    with pytest.raises(DomainError, match=message):
        FiniteSupportCgf(atoms)


def test_finite_support_higher_at_zero_matches_signflip():
    c = FiniteSupportCgf(((2.0, 0.5), (-2.0, 0.5)))
    k3, k4 = finite_support_higher_at_zero(c)
    assert k3 == pytest.approx(0.0, abs=1e-14)
    assert k4 == pytest.approx(-32.0, rel=1e-14)


def test_tilted_moments_examples():
    rademacher = FiniteSupportCgf(((1.0, 0.5), (-1.0, 0.5)))
    mean, var = tilted_moments(rademacher, 0.0)
    assert mean == pytest.approx(0.0, abs=1e-15)
    assert var == pytest.approx(1.0, rel=1e-15)
    for s in (-1.3, -0.2, 0.7, 1.9):
        assert tilted_moments(rademacher, s)[0] == pytest.approx(math.tanh(s), abs=1e-14)
    pm2 = FiniteSupportCgf(((2.0, 0.5), (-2.0, 0.5)))
    assert tilted_moments(pm2, 0.25)[0] == pytest.approx(0.9242343, abs=1e-7)


def test_tilted_moments_equal_direct_reweighting():
    rng = np.random.default_rng(RNG_SEED)
    for _ in range(100):
        c = FiniteSupportCgf(_random_atoms(rng, int(rng.integers(2, 7))))
        s = float(rng.uniform(-1.9, 1.9))
        values = np.array([v for v, _ in c.atoms])
        weights = np.array([p * math.exp(s * v) for v, p in c.atoms])
        q = weights / weights.sum()
        mean = float(np.dot(q, values))
        var = float(np.dot(q, (values - mean) ** 2))
        got_mean, got_var = tilted_moments(c, s)
        assert got_mean == pytest.approx(mean, abs=1e-12)
        assert got_var == pytest.approx(var, abs=1e-12)
        atoms = tilted_atoms(c, s)
        assert math.fsum(p for _, p in atoms) == pytest.approx(1.0, abs=1e-14)


def test_pooled_eval_at_zero():
    x = np.array([1.0, -2.0, 0.5, 3.0])
    ev = pooled_eval(PooledCgf.from_sample(x), 0.0)
    assert (ev.k, ev.k1) == (0.0, 0.0)
    assert ev.k2 == pytest.approx(float(np.mean(x ** 2)), rel=1e-15)


def test_pooled_eval_single_summand():
    c = SignFlipCgf(1.7)
    for s in (-1.2, 0.3, 0.9):
        pooled = pooled_eval(PooledCgf([c]), s)
        single = signflip_eval(c, s)
        assert_allclose([pooled.k, pooled.k1, pooled.k2], [single.k, single.k1, single.k2], rtol=1e-15)


def test_pooled_eval_two_point_example():
    ev = pooled_eval(PooledCgf.from_sample([1.0, 2.0]), 0.1)
    expected = (1.0 * math.tanh(0.1) + 2.0 * math.tanh(0.2)) / 2.0
    assert ev.k1 == pytest.approx(expected, rel=1e-14)


def test_pooled_mixes_summand_kinds():
    summands = [SignFlipCgf(1.0), FiniteSupportCgf(((2.0, 0.5), (-2.0, 0.5)))]
    ev = pooled_eval(PooledCgf(summands), 0.25)
    expected_k1 = (math.tanh(0.25) + 2.0 * math.tanh(0.5)) / 2.0
    assert ev.k1 == pytest.approx(expected_k1, rel=1e-13)


def test_pooled_rejects_mixed_epsilon():
    with pytest.raises(DomainError):
        PooledCgf([SignFlipCgf(1.0), SignFlipCgf(2.0, epsilon=1.0)])
    with pytest.raises(DomainError):
        PooledCgf([])


def test_pooled_degenerate_and_nu_max():
    assert PooledCgf.from_sample([0.0, 0.0]).degenerate
    pool = PooledCgf.from_sample([0.0, -3.0, 1.0])
    assert not pool.degenerate
    assert pool.nu_max == 3.0


@pytest.mark.parametrize('x', [0.3, 1.0, -2.5, 7.0, 40.0])
def test_signflip_symmetries(x):
    c = SignFlipCgf(x)
    for s in S_GRID:
        plus, minus = signflip_eval(c, s), signflip_eval(c, -s)
        assert abs(plus.k - minus.k) <= 1e-13
        assert abs(plus.k1 + minus.k1) <= 1e-13
        assert abs(plus.k2 - minus.k2) <= 1e-13


def test_pooled_symmetries_are_exact():
    rng = np.random.default_rng(RNG_SEED)
    pool = PooledCgf.from_sample(rng.uniform(-5.0, 5.0, size=37))
    for s in S_GRID:
        plus, minus = pool.evaluate(s), pool.evaluate(-s)
        assert plus.k == minus.k
        assert plus.k1 == -minus.k1
        assert plus.k2 == minus.k2


def test_finite_differences_match_derivatives():
    rng = np.random.default_rng(RNG_SEED)
    step = 1e-5
    for _ in range(1000):
        n = int(rng.integers(1, 51))
        pool = PooledCgf.from_sample(rng.uniform(-5.0, 5.0, size=n))
        s = float(rng.uniform(-0.95, 0.95))
        ev = pool.evaluate(s)
        up, down = pool.evaluate(s + step), pool.evaluate(s - step)
        d_k = (up.k - down.k) / (2 * step)
        d_k1 = (up.k1 - down.k1) / (2 * step)
        assert d_k == pytest.approx(ev.k1, rel=1e-6, abs=1e-8)
        assert d_k1 == pytest.approx(ev.k2, rel=1e-6, abs=1e-8)


def test_fourth_cumulant_matches_finite_differences():
    x = [1.0, -0.5, 0.8, 1.3]
    pool = PooledCgf.from_sample(x)
    h = 2e-3
    k = [pool.evaluate(j * h).k for j in (-2, -1, 0, 1, 2)]
    fourth = (k[0] - 4 * k[1] + 6 * k[2] - 4 * k[3] + k[4]) / h ** 4
    expected = float(np.mean([signflip_higher_at_zero(SignFlipCgf(v))[1] for v in x]))
    assert fourth == pytest.approx(expected, rel=1e-4)


def test_moment_dominance_for_finite_support_pools():
    rng = np.random.default_rng(RNG_SEED)
    for _ in range(100):
        pool = [FiniteSupportCgf(_random_atoms(rng, int(rng.integers(2, 6)))) for _ in range(int(rng.integers(1, 20)))]
        third = np.mean([sum(p * abs(v) ** 3 for v, p in c.atoms) for c in pool])
        fourth = np.mean([sum(p * v ** 4 for v, p in c.atoms) for c in pool])
        assert third <= fourth ** 0.75 * (1 + 1e-12)


@seed(11)
@given(
    x=st.lists(st.floats(min_value=-50.0, max_value=50.0), min_size=1, max_size=30),
    s=st.floats(min_value=-1.999, max_value=1.999),
)
def test_second_derivative_nonnegative(x, s):
    ev = PooledCgf.from_sample(x).evaluate(s)
    assert ev.k2 >= 0.0
    assert ev.k >= 0.0
