import math

import pytest
from hypothesis import given, settings, strategies as st
from scipy.integrate import quad

from robusthedge.counterexample import (
    CounterexampleError,
    SQRT_2_OVER_PI,
    band_mass,
    choose_sigma,
    divergence_demo,
    f_band,
    gaussian_abs_mean,
    phi_limit,
    phi_trunc,
)


def _phi_pdf(u):
    return math.exp(-0.5 * u * u) / math.sqrt(2 * math.pi)


# -- closed-form absolute mean -------------------------------------------


def test_abs_mean_at_zero():
    assert gaussian_abs_mean(0.0) == pytest.approx(SQRT_2_OVER_PI, abs=1e-12)


def test_abs_mean_matches_quadrature_oracle():
    for m in [-3.0, -1.0, -0.2, 0.0, 0.5, 1.0, 2.5]:
        ref, _ = quad(lambda u: abs(u + m) * _phi_pdf(u), -40, 40, epsabs=1e-12)
        assert gaussian_abs_mean(m) == pytest.approx(ref, abs=1e-10)


def test_abs_mean_tail_asymptotics():
    assert gaussian_abs_mean(10.0) == pytest.approx(10.0, abs=1e-8)
    assert gaussian_abs_mean(-10.0) == pytest.approx(10.0, abs=1e-8)


def test_abs_mean_even_convex_bounded_below():
    grid = [i / 4 for i in range(-20, 21)]
    for m in grid:
        assert gaussian_abs_mean(m) == pytest.approx(gaussian_abs_mean(-m), abs=1e-14)
        assert gaussian_abs_mean(m) >= SQRT_2_OVER_PI - 1e-14
    for a, b, c in zip(grid, grid[1:], grid[2:]):
        mid = gaussian_abs_mean(b)
        assert mid <= 0.5 * (gaussian_abs_mean(a) + gaussian_abs_mean(c)) + 1e-12


# -- band values ---------------------------------------------------------


def test_band_mass_survives_deep_bands():
    assert band_mass(0) == pytest.approx(2 * (0.5 * math.erf(1 / math.sqrt(2))), abs=1e-12)
    assert band_mass(19) > 0
    assert band_mass(30) > 0
    with pytest.raises(CounterexampleError):
        band_mass(-1)


def test_f_band_lower_bound():
    for i in range(6):
        for sigma in (1.0, 10.0, 100.0):
            assert f_band(i, sigma) >= sigma * SQRT_2_OVER_PI * band_mass(i) - 1e-12


def test_f_band_monotone_in_sigma():
    vals = [f_band(3, 2.0**k) for k in range(21)]
    assert all(a < b for a, b in zip(vals, vals[1:]))


def test_f_band_linear_growth_ratio():
    sigma = 1e6
    ratio = f_band(0, sigma) / sigma
    assert ratio == pytest.approx(SQRT_2_OVER_PI * band_mass(0), rel=1e-6)


def test_f_band_rejects_bad_arguments():
    with pytest.raises(CounterexampleError):
        f_band(0, -1.0)
    with pytest.raises(CounterexampleError):
        f_band(0, 1.0, t=0.0)
    with pytest.raises(CounterexampleError):
        f_band(-2, 1.0)


# -- dispersion schedule -------------------------------------------------


def test_chosen_sigma_lands_in_target_window():
    for i in range(20):
        sigma = choose_sigma(i)
        assert 1.0 <= f_band(i, sigma) <= 2.0


def test_sigma_monotone_in_target_and_band():
    s1 = choose_sigma(4, target=1.0)
    s2 = choose_sigma(4, target=2.0)
    assert s2 >= s1
    sigmas = [choose_sigma(i) for i in range(20)]
    assert all(a <= b for a, b in zip(sigmas, sigmas[1:]))


def test_divergence_table():
    rows = divergence_demo(20)
    assert len(rows) == 20
    assert all(row.f_value >= 1.0 for row in rows)
    assert rows[-1].partial_sum >= 20.0
    sums = [row.partial_sum for row in rows]
    assert all(a < b for a, b in zip(sums, sums[1:]))


def test_divergence_single_band():
    rows = divergence_demo(1)
    assert len(rows) == 1
    assert 1.0 <= rows[0].partial_sum <= 2.0


def test_divergence_budget_guard():
    with pytest.raises(CounterexampleError):
        divergence_demo(51)


# -- capped-ramp truncation ----------------------------------------------


def test_phi_trunc_pointwise_cases():
    assert phi_trunc(1.5, 2.0, 10.0, 0.5) == 0.0  # inside the dead zone
    assert phi_trunc(2.25, 2.0, 100.0, 0.5) == pytest.approx(2.25 / 2)  # ramp = 1/2
    assert phi_trunc(5.0, 2.0, 3.0, 0.5) == 3.0  # cap binds past the ramp
    assert phi_trunc(-5.0, 2.0, 100.0, 0.5) == 5.0  # even in x
    with pytest.raises(CounterexampleError):
        phi_trunc(1.0, 2.0, 0.0, 0.5)
    with pytest.raises(CounterexampleError):
        phi_trunc(1.0, -1.0, 1.0, 0.5)


@settings(max_examples=300, deadline=None)
@given(
    st.floats(-10, 10),
    st.floats(0, 5),
    st.floats(0.1, 20),
    st.floats(0.01, 5),
)
def test_phi_trunc_monotone_and_bounded(x, n, K, l):
    v = phi_trunc(x, n, K, l)
    assert 0.0 <= v <= min(max(abs(x), 0.0), K) + 1e-12
    assert v <= phi_limit(x, n) + l  # dominated by the target up to ramp width
    assert phi_trunc(x, n, K * 2, l) >= v - 1e-12  # nondecreasing in the cap
    assert phi_trunc(x, n, K, l / 2) >= v - 1e-12  # sharper ramp only grows


@settings(max_examples=200, deadline=None)
@given(
    st.floats(-10, 10),
    st.floats(-10, 10),
    st.floats(0, 5),
    st.floats(0.1, 20),
    st.floats(0.01, 5),
)
def test_phi_trunc_lipschitz(x, y, n, K, l):
    lhs = abs(phi_trunc(x, n, K, l) - phi_trunc(y, n, K, l))
    assert lhs <= (1.0 + K / l) * abs(x - y) + 1e-9


def test_phi_trunc_converges_pointwise():
    n = 2.0
    for x in (n - 1.0, n, n + 1e-6, n + 5.0):
        errs = [
            abs(phi_trunc(x, n, float(2**k), 2.0 ** (-k)) - phi_limit(x, n))
            for k in range(1, 31)
        ]
        assert errs[-1] < 1e-6
