import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate

from modeseek.errors import DomainError
from modeseek.kernels import (
    KERNEL_NAMES,
    get_kernel,
    kernel_value,
    max_poly_degree,
    normalization_constant,
    profile_value,
    subgradient_profile_value,
)

# (asm2, asm3) per kernel; every catalog kernel satisfies asm4.
TABLE_FLAGS = {
    "biweight": (True, True),
    "threehalves": (True, False),
    "triweight": (True, True),
    "tricube": (False, True),
    "cosine": (True, False),
    "epanechnikov": (True, False),
    "gaussian": (True, True),
    "logistic": (True, True),
    "cauchy": (True, True),
}

U_GRID = np.linspace(0.0, 3.0, 10_000)


def test_catalog_names():
    assert set(KERNEL_NAMES) == set(TABLE_FLAGS)
    assert get_kernel("GaUsSiAn").name == "gaussian"
    with pytest.raises(DomainError, match="available"):
        get_kernel("triangle")


@pytest.mark.parametrize("name", sorted(TABLE_FLAGS))
def test_table_flags(name):
    k = get_kernel(name)
    assert (k.satisfies_asm2, k.satisfies_asm3) == TABLE_FLAGS[name]
    assert k.satisfies_asm4


def test_profile_examples():
    assert profile_value("biweight", 0.5) == 0.25
    assert profile_value("epanechnikov", 2.0) == 0.0
    # oracle: 30-digit mpmath evaluation of exp(-0.45125)
    assert profile_value("gaussian", 0.45125) == pytest.approx(0.636831614371743130, rel=1e-14)


def test_subgradient_examples():
    assert subgradient_profile_value("epanechnikov", 0.5) == 1.0
    assert subgradient_profile_value("epanechnikov", 1.0) == 0.0
    assert subgradient_profile_value("biweight", 0.5) == 1.0


def test_kernel_value_examples():
    assert kernel_value("gaussian", np.zeros(3)) == 1.0
    assert kernel_value("biweight", [1.0, 1.0]) == 0.0
    assert kernel_value("triweight", [1.0]) == 0.125
    with pytest.raises(DomainError):
        kernel_value("gaussian", [np.inf])


def test_negative_argument_rejected():
    with pytest.raises(DomainError):
        profile_value("gaussian", -0.1)
    with pytest.raises(DomainError):
        subgradient_profile_value("biweight", -1e-9)


def test_max_poly_degree():
    assert max_poly_degree("epanechnikov") == 2
    assert max_poly_degree("biweight") == 4
    assert max_poly_degree("triweight") == 6
    assert max_poly_degree("gaussian") is None


@pytest.mark.parametrize("name", KERNEL_NAMES)
def test_profile_nonnegative(name):
    k = get_kernel(name)
    p = k.profile(U_GRID)
    assert np.all(p >= 0)
    if k.satisfies_asm2:
        assert np.all(p <= k.profile(np.array(0.0)) + 1e-15)
        assert np.all(np.diff(p) <= 1e-15)


@pytest.mark.parametrize("name", [n for n in KERNEL_NAMES if TABLE_FLAGS[n][0]])
def test_subgradient_profile_bounded_nonincreasing(name):
    s = get_kernel(name).subgradient_profile(U_GRID)
    assert np.all(s >= 0)
    assert np.all(np.diff(s) <= 1e-14)
    assert np.all(s <= s[0] + 1e-15)


@pytest.mark.parametrize("name", KERNEL_NAMES)
def test_subgradient_is_minus_derivative(name):
    k = get_kernel(name)
    u = np.linspace(0.003, 2.9, 997)
    u = u[~k.has_knot_near(u, 1e-4)]
    step = 1e-6
    fd = -(k.profile(u + step) - k.profile(u - step)) / (2 * step)
    np.testing.assert_allclose(k.subgradient_profile(u), fd, atol=1e-6, rtol=1e-6)


@pytest.mark.parametrize("name", KERNEL_NAMES)
def test_second_derivative_matches_fd(name):
    k = get_kernel(name)
    u = np.linspace(0.004, 2.9, 613)
    u = u[~k.has_knot_near(u, 1e-3)]
    step = 1e-6
    fd = -(k.subgradient_profile(u + step) - k.subgradient_profile(u - step)) / (2 * step)
    np.testing.assert_allclose(k.second_profile_derivative(u), fd, atol=1e-5, rtol=1e-5)


@pytest.mark.parametrize("name", ["cosine", "logistic"])
def test_second_derivative_series_branch_continuous(name):
    k2 = get_kernel(name).second_profile_derivative
    below, above = k2(np.array(1e-2 * (1 - 1e-12))), k2(np.array(1e-2 * (1 + 1e-12)))
    assert below == pytest.approx(above, rel=1e-11)


@pytest.mark.parametrize("name", [n for n in KERNEL_NAMES if TABLE_FLAGS[n][0]])
def test_midpoint_convexity(name, rng):
    k = get_kernel(name)
    upper = 2.0 * (k.support_radius_sq_half or 1.5)
    u, v = rng.uniform(0, upper, size=(2, 10_000))
    lhs = k.profile(0.5 * (u + v))
    rhs = 0.5 * (k.profile(u) + k.profile(v))
    assert np.all(lhs <= rhs + 1e-12)


def test_tricube_convexity_witness():
    k = get_kernel("tricube")
    g = np.linspace(0, 1.2, 400)
    u, v = np.meshgrid(g, g)
    gap = k.profile(0.5 * (u + v)) - 0.5 * (k.profile(u) + k.profile(v))
    i, j = np.unravel_index(np.argmax(gap), gap.shape)
    assert gap[i, j] > 1e-3
    # the witness pair violates midpoint convexity
    assert profile_value("tricube", 0.5 * (u[i, j] + v[i, j])) > 0.5 * (
        profile_value("tricube", u[i, j]) + profile_value("tricube", v[i, j])
    )


@pytest.mark.parametrize("name", [n for n in KERNEL_NAMES if TABLE_FLAGS[n][0]])
def test_kernel_minorizer(name, rng):
    k = get_kernel(name)
    d = 2
    x = rng.uniform(-2, 2, size=(1000, d))
    xp = rng.uniform(-2, 2, size=(1000, d))
    ux = 0.5 * np.sum(x * x, axis=1)
    up = 0.5 * np.sum(xp * xp, axis=1)
    minor = k.profile(up) + k.subgradient_profile(up) * (up - ux)
    assert np.all(k.profile(ux) >= minor - 1e-12)
    assert np.array_equal(k.profile(up) + k.subgradient_profile(up) * (up - up), k.profile(up))


def test_normalization_gaussian_epanechnikov():
    assert normalization_constant("gaussian", 1) == pytest.approx(1 / math.sqrt(2 * math.pi), rel=1e-10)
    assert normalization_constant("gaussian", 3) == pytest.approx((2 * math.pi) ** -1.5, rel=1e-10)
    assert normalization_constant("epanechnikov", 1) == pytest.approx(3 / (4 * math.sqrt(2)), rel=1e-10)


def test_normalization_biweight_simpson():
    x = np.linspace(-math.sqrt(2), math.sqrt(2), 1_000_001)
    mass = integrate.simpson(np.maximum(1 - x * x / 2, 0) ** 2, x=x)
    assert normalization_constant("biweight", 1) == pytest.approx(1 / mass, rel=1e-8)


@pytest.mark.filterwarnings("ignore::scipy.integrate.IntegrationWarning")
@pytest.mark.parametrize("name", [n for n in KERNEL_NAMES if n != "cauchy"])
def test_normalization_2d_cartesian(name):
    k = get_kernel(name)
    u_max = k.support_radius_sq_half
    if u_max is None:
        u_max = 1.0
        while k.profile(np.float64(u_max)) > 1e-17:
            u_max *= 2.0
    r = math.sqrt(2 * u_max)
    mass, _ = integrate.dblquad(
        lambda y, x: float(k.profile(np.float64(0.5 * (x * x + y * y)))),
        -r, r, -r, r, epsabs=1e-11, epsrel=1e-10,
    )
    assert normalization_constant(name, 2) * mass == pytest.approx(1.0, rel=1e-6)


def test_cauchy_not_normalizable_beyond_1d():
    assert normalization_constant("cauchy", 1) == pytest.approx(1 / (math.pi * math.sqrt(2)), rel=1e-9)
    with pytest.raises(DomainError):
        normalization_constant("cauchy", 2)


def test_scaled_kernel():
    k = get_kernel("biweight").scaled(3.0)
    assert profile_value(k, 0.5) == pytest.approx(0.75)
    assert subgradient_profile_value(k, 0.5) == pytest.approx(3.0)
    with pytest.raises(DomainError):
        get_kernel("gaussian").scaled(0.0)


@settings(max_examples=200, deadline=None)
@given(st.sampled_from(KERNEL_NAMES), st.floats(0, 50, allow_nan=False))
def test_profile_scalar_matches_vector(name, u):
    k = get_kernel(name)
    assert profile_value(k, u) == pytest.approx(float(k.profile(np.array([u]))[0]), rel=1e-15, abs=0)
