"""Total variation: exact 1-d path, Monte Carlo path, finite path, bounds."""
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ppdl import FiniteDist, GaussianParams
from ppdl.distributions import density
from ppdl.errors import ConfigError
from ppdl.tv import (
    is_gaussian_1d,
    point_set_distance,
    tv_between,
    tv_exact_gaussian_1d,
    tv_finite,
    tv_lower_bound_1d,
    tv_monte_carlo,
)


def g1(mean, var):
    return GaussianParams(mean=[mean], covariance=[[var]])


def normal_cdf(x):
    return 0.5 * (1.0 + math.erf(x / math.sqrt(2.0)))


TV_HALF_SHIFT = 2.0 * normal_cdf(0.5) - 1.0  # TV(N(0,1), N(1,1))


def tv_trapezoid(p, q, points=2_000_001):
    """Numeric integration oracle: (1/2) ∫ |p - q| on a wide fine grid."""
    m1, v1 = float(p.mean[0]), float(p.covariance[0, 0])
    m2, v2 = float(q.mean[0]), float(q.covariance[0, 0])
    spread = 8.0 * math.sqrt(max(v1, v2))
    lo = min(m1, m2) - spread
    hi = max(m1, m2) + spread
    xs = np.linspace(lo, hi, points).reshape(-1, 1)
    gap = np.abs(density(p, xs) - density(q, xs))
    return 0.5 * float(np.trapezoid(gap, dx=(hi - lo) / (points - 1)))


def random_gaussian_1d(rng, mu_lo=-5.0, mu_hi=5.0, var_lo=0.1, var_hi=10.0):
    return g1(rng.uniform(mu_lo, mu_hi), rng.uniform(var_lo, var_hi))


# ------------------------------ exact path ------------------------------


def test_exact_identical_is_zero():
    assert tv_exact_gaussian_1d(g1(0, 1), g1(0, 1)) == 0.0
    assert tv_exact_gaussian_1d(g1(-3, 2.5), g1(-3, 2.5)) == 0.0


def test_exact_unit_shift_closed_form():
    got = tv_exact_gaussian_1d(g1(0, 1), g1(1, 1))
    assert got == pytest.approx(TV_HALF_SHIFT, abs=1e-12)
    assert got == pytest.approx(0.38292, abs=5e-6)


def test_exact_equal_variance_closed_form():
    # Same-variance pairs have TV = 2*Phi(|dm|/(2*sd)) - 1.
    rng = np.random.default_rng(1)
    for _ in range(20):
        mu1, mu2 = rng.uniform(-5, 5, size=2)
        var = rng.uniform(0.1, 10.0)
        want = 2.0 * normal_cdf(abs(mu1 - mu2) / (2.0 * math.sqrt(var))) - 1.0
        assert tv_exact_gaussian_1d(g1(mu1, var), g1(mu2, var)) == pytest.approx(
            want, abs=1e-12
        )


def test_exact_matches_integration_oracle():
    rng = np.random.default_rng(2)
    worst = 0.0
    for _ in range(100):
        p, q = random_gaussian_1d(rng), random_gaussian_1d(rng)
        gap = abs(tv_exact_gaussian_1d(p, q) - tv_trapezoid(p, q))
        worst = max(worst, gap)
    assert worst < 1e-6


def test_exact_symmetry_and_range():
    rng = np.random.default_rng(3)
    for _ in range(200):
        p, q = random_gaussian_1d(rng), random_gaussian_1d(rng)
        t = tv_exact_gaussian_1d(p, q)
        assert t == tv_exact_gaussian_1d(q, p)
        assert 0.0 <= t <= 1.0
    assert tv_exact_gaussian_1d(g1(-1e6, 0.1), g1(1e6, 0.1)) == 1.0


@settings(max_examples=150, deadline=None)
@given(
    st.tuples(
        *(st.floats(min_value=-5.0, max_value=5.0) for _ in range(3)),
        *(st.floats(min_value=0.1, max_value=10.0) for _ in range(3)),
    )
)
def test_exact_triangle_inequality(params):
    m1, m2, m3, v1, v2, v3 = params
    a, b, c = g1(m1, v1), g1(m2, v2), g1(m3, v3)
    assert tv_exact_gaussian_1d(a, c) <= (
        tv_exact_gaussian_1d(a, b) + tv_exact_gaussian_1d(b, c) + 1e-12
    )


# ------------------------------ certified floor ------------------------------


def test_lower_bound_unit_shift():
    floor = tv_lower_bound_1d(g1(0, 1), g1(1, 1))
    assert floor == pytest.approx(0.005, abs=1e-15)
    assert tv_exact_gaussian_1d(g1(0, 1), g1(1, 1)) >= floor


def test_lower_bound_never_violated():
    rng = np.random.default_rng(4)
    for _ in range(1000):
        p, q = random_gaussian_1d(rng), random_gaussian_1d(rng)
        exact = tv_exact_gaussian_1d(p, q)
        assert exact >= tv_lower_bound_1d(p, q)
        assert exact >= tv_lower_bound_1d(q, p)


# ------------------------------ finite path ------------------------------


def test_finite_half_l1():
    p = FiniteDist(masses=[0.2, 0.8])
    q = FiniteDist(masses=[0.5, 0.5])
    assert tv_finite(p, q) == pytest.approx(0.3, abs=1e-15)
    assert tv_finite(p, p) == 0.0


def test_finite_domain_mismatch():
    with pytest.raises(ConfigError):
        tv_finite(FiniteDist(masses=[1.0]), FiniteDist(masses=[0.5, 0.5]))


def test_finite_mc_agrees_with_exact():
    p = FiniteDist(masses=[0.1, 0.4, 0.5])
    q = FiniteDist(masses=[0.3, 0.3, 0.4])
    exact = tv_finite(p, q)
    est, half = tv_monte_carlo(p, q, 100_000, 9)
    assert abs(est - exact) <= half + 0.005


# ------------------------------ Monte Carlo path ------------------------------


def test_mc_identical_near_zero():
    est, half = tv_monte_carlo(g1(0, 1), g1(0, 1), 10_000, 0)
    assert est <= half + 1e-12
    assert est < 0.02


def test_mc_matches_exact_unit_shift():
    est, _ = tv_monte_carlo(g1(0, 1), g1(1, 1), 100_000, 11)
    assert abs(est - TV_HALF_SHIFT) < 0.01


def test_mc_separated_2d():
    a = GaussianParams(mean=[0.0, 0.0], covariance=np.eye(2))
    b = GaussianParams(mean=[5.0, 5.0], covariance=np.eye(2))
    est, _ = tv_monte_carlo(a, b, 10_000, 12)
    assert est >= 0.99


def test_mc_within_ci_of_exact_random_pairs():
    rng = np.random.default_rng(13)
    misses = 0
    for trial in range(20):
        p, q = random_gaussian_1d(rng), random_gaussian_1d(rng)
        exact = tv_exact_gaussian_1d(p, q)
        est, half = tv_monte_carlo(p, q, 20_000, 1000 + trial)
        if abs(est - exact) > half:
            misses += 1
    # 95% intervals: a couple of misses in 20 is within tolerance.
    assert misses <= 3


def test_mc_determinism_and_validation():
    a = tv_monte_carlo(g1(0, 1), g1(1, 1), 1000, 7)
    b = tv_monte_carlo(g1(0, 1), g1(1, 1), 1000, 7)
    assert a == b
    with pytest.raises(ConfigError):
        tv_monte_carlo(g1(0, 1), g1(1, 1), 99, 0)


# ------------------------------ dispatch ------------------------------


def test_tv_between_dispatch_methods():
    t, half, method = tv_between(g1(0, 1), g1(1, 1))
    assert method == "exact-gaussian-1d" and half == 0.0
    assert t == pytest.approx(TV_HALF_SHIFT, abs=1e-12)
    _, _, method = tv_between(FiniteDist(masses=[1.0]), FiniteDist(masses=[1.0]))
    assert method == "exact-finite"
    a = GaussianParams(mean=[0.0, 0.0], covariance=np.eye(2))
    b = GaussianParams(mean=[1.0, 0.0], covariance=np.eye(2))
    _, half, method = tv_between(a, b, trials=2000, rng=5)
    assert method == "monte-carlo" and half > 0.0


def test_tv_between_mc_requires_rng():
    a = GaussianParams(mean=[0.0, 0.0], covariance=np.eye(2))
    with pytest.raises(ConfigError):
        tv_between(a, a)


def test_is_gaussian_1d():
    assert is_gaussian_1d(g1(0, 1))
    assert not is_gaussian_1d(GaussianParams(mean=[0, 0], covariance=np.eye(2)))
    assert not is_gaussian_1d(FiniteDist(masses=[1.0]))


# ------------------------------ point-set distance ------------------------------


def test_point_set_distance_member():
    p = g1(0, 1)
    t, idx = point_set_distance(p, [p])
    assert t == 0.0 and idx == 0
    t, idx = point_set_distance(p, [g1(10, 1), p])
    assert t == 0.0 and idx == 1


def test_point_set_distance_closer_one():
    t, idx = point_set_distance(g1(0, 1), [g1(1, 1), g1(2, 1)])
    assert idx == 0
    assert t == pytest.approx(TV_HALF_SHIFT, abs=1e-12)


def test_point_set_distance_empty():
    with pytest.raises(ConfigError):
        point_set_distance(g1(0, 1), [])
