import math
import warnings

import numpy as np
import pytest
from scipy.integrate import quad

from horocycle import (
    DecayFunction,
    QuadratureSpec,
    decay_certificate,
    transform_plane,
    transform_sphere,
    transform_via_isometry,
)
from horocycle.errors import DecayOverflowError, NaNEncountered, NonIntegrableError, TruncationWarning
from horocycle.transform import translate, zero_function

from _functions import exp_distance, gaussian_type, radial_gaussian, smooth_bump

FAST = QuadratureSpec(theta_nodes=128, sphere_nodes=16, plane_nodes=128)


def _g(u):
    return np.exp(-(np.log(u) + 0.2) ** 2)


def _product(n):
    return DecayFunction(lambda xp, xn: np.exp(-np.sum(xp**2, -1)) * _g(xn), 10.0, n)


@pytest.mark.parametrize("n", [2, 3, 4])
def test_zero_function(n):
    assert transform_sphere(zero_function(n), [0.0] * (n - 1), 0.3).value == 0.0
    assert transform_plane(zero_function(n), 0.7).value == 0.0
    assert transform_via_isometry(zero_function(n), [0.0] * (n - 1), 0.3).value == 0.0


def test_circle_against_arc_length_quadrature():
    """n = 2, f = exp(-4 d(0, x)), circle of radius 1/4 tangent at 0."""
    r = 0.25

    def integrand(theta):
        x, y = r * math.sin(theta), r * (1 - math.cos(theta))
        if y <= 0.0:
            return 0.0
        ch = 1 + (x * x + (y - 1) ** 2) / (2 * y)
        # hyperbolic arc length element r dtheta / y
        return (ch + math.sqrt(ch * ch - 1)) ** -4 * r / y

    oracle = quad(integrand, 0, math.pi, epsabs=0, epsrel=1e-12, limit=200)[0] \
        + quad(integrand, math.pi, 2 * math.pi, epsabs=0, epsrel=1e-12, limit=200)[0]
    got = transform_sphere(exp_distance(2, 4.0), [0.0], r).value
    assert got == pytest.approx(oracle, rel=1e-6)


def test_plane_gaussian_closed_forms():
    f2, f3 = _product(2), _product(3)
    assert transform_plane(f2, 1.0).value == pytest.approx(math.sqrt(math.pi) * _g(1.0), rel=1e-10)
    assert transform_plane(f3, 0.5).value == pytest.approx(4 * math.pi * _g(0.5), rel=1e-10)


def test_sphere_n3_against_isometry_route():
    f = gaussian_type(3)
    a = transform_sphere(f, [0.0, 0.0], 1 / 3).value
    b = transform_via_isometry(f, [0.0, 0.0], 1 / 3).value
    assert a == pytest.approx(b, rel=1e-6)


def test_isometry_route_n2_and_radial_n4():
    f = exp_distance(2, 4.0)
    assert transform_via_isometry(f, [0.0], 0.25).value == pytest.approx(
        transform_sphere(f, [0.0], 0.25).value, rel=1e-6)
    g = radial_gaussian(4)
    assert transform_via_isometry(g, [0.0] * 3, 0.5, FAST).value == pytest.approx(
        transform_sphere(g, [0.0] * 3, 0.5, FAST).value, rel=1e-5)


def test_cross_check_random_horocycles():
    rng = np.random.default_rng(7)
    worst = 0.0
    for _ in range(20):
        n = int(rng.integers(2, 5))
        f = gaussian_type(n, shift=float(rng.uniform(-0.5, 0.5)), mu=float(rng.uniform(-1.0, 0.0)))
        contact = rng.uniform(-1, 1, n - 1)
        r = float(rng.uniform(0.1, 0.5))
        a = transform_sphere(f, contact, r, FAST).value
        b = transform_via_isometry(f, contact, r, FAST).value
        worst = max(worst, abs(a - b) / (abs(a) + 1e-12))
    assert worst <= 1e-5


@pytest.mark.parametrize("n", [2, 3])
def test_translation_equivariance(n):
    f = gaussian_type(n)
    t = np.linspace(0.3, -0.4, n - 1)
    x = np.full(n - 1, 0.1)
    a = transform_sphere(f, x + t, 0.3).value
    b = transform_sphere(translate(f, t), x, 0.3).value
    assert abs(a - b) <= 1e-10


@pytest.mark.parametrize("n", [2, 3, 4])
def test_refinement_within_error_estimate(n):
    f = gaussian_type(n)
    q = QuadratureSpec(theta_nodes=64, sphere_nodes=8, plane_nodes=64)
    coarse = transform_sphere(f, [0.2] * (n - 1), 0.35, q)
    fine = transform_sphere(f, [0.2] * (n - 1), 0.35, q.refined())
    assert abs(fine.value - coarse.value) <= coarse.error
    pc = transform_plane(f, 0.6, q)
    pf = transform_plane(f, 0.6, q.refined())
    assert abs(pf.value - pc.value) <= pc.error


@pytest.mark.parametrize("n", [2, 3])
def test_easy_support_direction(n):
    f = DecayFunction(lambda xp, xn: np.exp(-np.sum(xp**2, -1)) * smooth_bump(xn, 1.2, 2.0), 12.0, n)
    rng = np.random.default_rng(11)
    for r in [0.05, 0.2, 0.45, 0.5]:
        contact = rng.uniform(-1, 1, n - 1)
        assert abs(transform_sphere(f, contact, r).value) <= 1e-10


def test_decay_certificate_examples():
    assert decay_certificate(zero_function(3), 5.0) == 0.0
    f = exp_distance(3, 2.0)
    assert decay_certificate(f, 1.0) == pytest.approx(1.0, rel=1e-12)
    assert decay_certificate(f, 2.0) == pytest.approx(1.0, rel=1e-9)


def test_decay_certificate_bounds_samples():
    f = gaussian_type(3)
    c = decay_certificate(f, 4.0)
    assert math.isfinite(c)
    rng = np.random.default_rng(5)
    xp = rng.normal(size=(500, 2))
    xn = np.exp(rng.normal(size=500))
    from horocycle.geometry import distance_from_origin
    # the certificate is an empirical sup: off-sample points may exceed it only slightly
    assert np.max(np.abs(f(xp, xn)) * np.exp(4.0 * distance_from_origin(xp, xn))) <= 1.5 * c


def test_decay_certificate_overflow_names_point():
    f = DecayFunction(lambda xp, xn: np.ones(np.shape(xn)), 400.0, 2, name="flat")
    with pytest.raises(DecayOverflowError, match="x_n="):
        decay_certificate(f, 400.0)


def test_decay_certificate_rejects_order_above_claim():
    with pytest.raises(ValueError):
        decay_certificate(exp_distance(2, 1.0), 2.0)


def test_insufficient_decay_is_non_integrable():
    with pytest.raises(NonIntegrableError):
        transform_sphere(exp_distance(3, 2.0), [0.0, 0.0], 0.3)


def test_nan_propagates_as_error():
    f = DecayFunction(lambda xp, xn: np.full(np.shape(xn), np.nan), 5.0, 2, name="nan")
    with pytest.raises(NaNEncountered):
        transform_plane(f, 1.0)
    with pytest.raises(FloatingPointError):
        transform_sphere(f, [0.0], 0.2)


def test_plane_truncation_warning():
    f = _product(2)
    with pytest.warns(TruncationWarning):
        transform_plane(f, 1.0, QuadratureSpec(plane_cutoff=0.5))
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        transform_plane(f, 1.0)


def test_quadrature_spec_validation():
    with pytest.raises(ValueError):
        QuadratureSpec(theta_nodes=1)
    with pytest.raises(ValueError):
        QuadratureSpec(plane_cutoff=0.0)


def test_contact_dimension_checked():
    with pytest.raises(ValueError):
        transform_sphere(gaussian_type(3), [0.0], 0.3)
