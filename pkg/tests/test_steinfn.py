import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from combclt.steinfn import F_SUP, SteinSolution, normal_cdf, stein_solution

mpmath.mp.dps = 40


def test_cdf_at_zero():
    assert normal_cdf(0.0) == 0.5


@pytest.mark.parametrize("x,expected", [(1.0, 0.8413447461), (-1.96, 0.0249978951)])
def test_cdf_reference_table(x, expected):
    assert normal_cdf(x) == pytest.approx(expected, abs=1e-10)


@pytest.mark.parametrize("x", np.linspace(-8, 8, 161))
def test_cdf_against_mpmath(x):
    assert abs(normal_cdf(x) - float(mpmath.ncdf(x))) <= 1e-12


def test_cdf_vectorized_matches_scalar():
    xs = np.linspace(-8, 8, 1001)
    assert np.array_equal(normal_cdf(xs), np.array([normal_cdf(x) for x in xs]))


def test_cdf_symmetry_and_monotone():
    xs = np.arange(-8, 8, 1 / 64)
    phi = normal_cdf(xs)
    assert np.all(np.abs(phi + normal_cdf(-xs) - 1) <= 1e-13)
    assert np.all(np.diff(phi) >= 0)
    assert normal_cdf(-40.0) >= 0.0 and normal_cdf(40.0) <= 1.0


def test_solution_peak():
    f, fp = stein_solution(0.0, 0.0)
    assert f == pytest.approx(math.sqrt(2 * math.pi) / 4, abs=1e-15)
    assert f == pytest.approx(0.626657, abs=1e-6)
    assert fp == pytest.approx(0.5)


def mp_solution(z, w):
    z, w = mpmath.mpf(z), mpmath.mpf(w)
    return mpmath.sqrt(2 * mpmath.pi) * mpmath.exp(w * w / 2) * mpmath.ncdf(min(w, z)) * mpmath.ncdf(-max(w, z))


@pytest.mark.parametrize("z", [-3.0, -0.7, 0.0, 1.2, 4.0])
@pytest.mark.parametrize("w", [-30.0, -10.0, -2.5, -0.1, 0.3, 1.2, 5.0, 10.0, 30.0])
def test_solution_against_high_precision(z, w):
    f, _ = stein_solution(z, w)
    assert f == pytest.approx(float(mp_solution(z, w)), rel=1e-12, abs=1e-300)


@pytest.mark.parametrize("z", [-2.0, 0.0, 1.5])
def test_tail_decay(z):
    # f(w) ~ Phi(z)/w as w -> +inf and ~ (1 - Phi(z))/|w| as w -> -inf
    for w in (10.0, 100.0, 1e4):
        f_pos, _ = stein_solution(z, w)
        f_neg, _ = stein_solution(z, -w)
        assert abs(f_pos) <= 1 / w and abs(f_neg) <= 1 / w
        assert w * f_pos == pytest.approx(normal_cdf(z), rel=2 / w**2)
        assert w * f_neg == pytest.approx(1 - normal_cdf(z), rel=2 / w**2)
    assert np.isfinite(stein_solution(z, 1e6)[0])


def test_no_overflow_far_out():
    f, fp = stein_solution(0.0, np.array([-1e3, -50.0, 50.0, 1e3]))
    assert np.all(np.isfinite(f)) and np.all(np.isfinite(fp))


@given(st.floats(-4, 4), st.floats(-4, 4))
@settings(max_examples=200, deadline=None)
def test_equation_residual_and_finite_difference(z, w):
    f, fp = stein_solution(z, w)
    assert fp - w * f - (1.0 if w <= z else 0.0) + normal_cdf(z) == pytest.approx(0.0, abs=1e-14)
    h = 1e-5
    if abs(w - z) > 2 * h:
        fd = (stein_solution(z, w + h)[0] - stein_solution(z, w - h)[0]) / (2 * h)
        assert fd == pytest.approx(fp, abs=1e-6)


def test_bounds_on_grid():
    z = np.arange(-4, 4 + 1 / 128, 1 / 64)[:, None]
    w = np.arange(-8, 8 + 1 / 128, 1 / 64)[None, :]
    f, fp = stein_solution(z, w)
    assert np.max(np.abs(f)) <= F_SUP + 1e-12
    assert np.max(np.abs(fp)) <= 1 + 1e-9


def test_lipschitz_property():
    rng = np.random.default_rng(2024)
    z, w, u, v = rng.uniform(-3, 3, size=(4, 10_000))
    fu, _ = stein_solution(z, w + u)
    fv, _ = stein_solution(z, w + v)
    lhs = np.abs((w + u) * fu - (w + v) * fv)
    rhs = (np.abs(w) + F_SUP) * (np.abs(u) + np.abs(v))
    assert np.all(lhs <= rhs + 1e-12)


def test_callable_wrapper():
    sol = SteinSolution(0.5)
    assert sol(0.2) == stein_solution(0.5, 0.2)
    with pytest.raises(ValueError):
        SteinSolution(math.inf)
