import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import special as sp
from scipy.integrate import quad

from horocycle import sphere_phase_integral
from horocycle.special import (
    EvenStepProfile,
    constant_profile,
    cosine_profile,
    lambda_bessel,
    phase_profile,
    sphere_area,
    sphere_rule,
)

Z_GRID = np.linspace(0.0, 20.0, 81)


def j_by_quadrature(z: float, n: int) -> float:
    """Direct quadrature of the phase integral over ``S_{n-2}``.

    Only the polar angle to ``e`` matters, so for ``n >= 3`` the sphere
    integral reduces to ``|S_{n-3}| int_0^pi cos(z cos t) sin^{n-3} t dt``.
    """
    if n == 2:
        return math.cos(z) + math.cos(-z)
    val, _ = quad(lambda t: math.cos(z * math.cos(t)) * math.sin(t) ** (n - 3), 0.0, math.pi,
                  epsabs=1e-13, epsrel=1e-12, limit=200)
    return sphere_area(n - 3) * val


@pytest.mark.parametrize("n", [2, 3, 4, 5, 6])
def test_j_matches_polar_quadrature(n):
    got = sphere_phase_integral(Z_GRID, n)
    want = np.array([j_by_quadrature(z, n) for z in Z_GRID])
    assert np.max(np.abs(got - want)) <= 1e-10


@pytest.mark.parametrize("n,nodes", [(3, 64), (4, 48), (5, 40)])
def test_j_matches_full_sphere_rule(n, nodes):
    pts, w = sphere_rule(n - 2, nodes)
    z = Z_GRID[::4]
    direct = np.cos(np.outer(z, pts[:, 0])) @ w
    assert np.max(np.abs(sphere_phase_integral(z, n) - direct)) <= 1e-10


def test_j_examples():
    assert sphere_phase_integral(0.0, 3) == pytest.approx(2 * math.pi, rel=1e-15)
    assert sphere_phase_integral(math.pi, 2) == pytest.approx(-2.0, rel=1e-15)
    assert sphere_phase_integral(1.0, 3) == pytest.approx(2 * math.pi * sp.j0(1.0), rel=1e-14)
    assert sphere_phase_integral(1.0, 3) == pytest.approx(4.80788, abs=1e-5)


def test_j_rejects_bad_dimension():
    with pytest.raises(ValueError):
        sphere_phase_integral(1.0, 1)
    with pytest.raises(ValueError):
        sphere_phase_integral(1.0, 9)


@pytest.mark.parametrize("nu", [-0.5, 0.0, 0.5, 1.0, 2.5])
def test_lambda_continuous_across_series_switch(nu):
    z = np.array([2.0 - 1e-9, 2.0 + 1e-9])
    a, b = lambda_bessel(nu, z)
    assert a == pytest.approx(b, rel=1e-8)
    assert lambda_bessel(nu, 3.0) == pytest.approx(sp.jv(nu, 3.0) / 3.0**nu, rel=1e-14)


def test_sphere_rule_total_measure():
    for k in range(0, 6):
        _, w = sphere_rule(k, 24)
        assert w.sum() == pytest.approx(sphere_area(k), rel=1e-13)


def test_cosine_and_constant_profiles():
    x = np.linspace(0, 5, 11)
    np.testing.assert_allclose(cosine_profile(1.3, 2.0)(x), 2 * np.cos(1.3 * x), atol=1e-14)
    np.testing.assert_allclose(constant_profile(2.5)(x), 2.5)
    np.testing.assert_allclose(phase_profile(2, 1.0)(x), 2 * np.cos(x), atol=1e-14)
    np.testing.assert_allclose(phase_profile(3, 0.0)(x), 2 * math.pi, rtol=1e-15)


@settings(max_examples=40, deadline=None)
@given(st.floats(0.0, 6.0), st.floats(0.1, 3.0), st.integers(0, 3))
def test_profile_q_derivatives_by_finite_difference(q, k, j):
    P = phase_profile(4, k)
    h = 1e-5 * max(1.0, q)
    q0 = max(q, 2 * h)
    fd = (P.dq(q0 + h, j) - P.dq(q0 - h, j)) / (2 * h)
    assert float(P.dq(q0, j + 1)) == pytest.approx(float(fd), rel=1e-5, abs=1e-7)


def test_even_step_profile_of_constant():
    # H = 1 in dimension n+2 = 4 (parent index n = 2): H1 = (n - 1) H = 1
    H1 = EvenStepProfile(constant_profile(1.0), 2)
    np.testing.assert_allclose(H1(np.linspace(0, 3, 7)), 1.0)


def test_even_step_profile_of_cosine():
    H1 = EvenStepProfile(cosine_profile(1.0), 2)
    x = np.linspace(0, 4, 17)
    np.testing.assert_allclose(H1(x), -x * np.sin(x) + np.cos(x), atol=1e-13)
    assert H1.at_zero() == pytest.approx(1.0)
