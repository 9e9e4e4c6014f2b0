import math
import warnings

import numpy as np
import pytest
from scipy.integrate import quad
from scipy.interpolate import CubicSpline

from horocycle import (
    AbelProblem,
    SecondKindProblem,
    reduce_diagonal_vanishing,
    reduce_even_step,
    solve_abel,
    solve_first_kind,
    solve_second_kind,
)
from horocycle.errors import DiagonalDegeneracyError, IncompatibleDataError, SingularStepError
from horocycle.slice_fourier import KernelEquation
from horocycle.special import EvenStepProfile, constant_profile, cosine_profile, phase_profile
from horocycle.volterra import grid_derivative, solve_kernel_equation

from _functions import smooth_bump


def one(s, t):
    return np.ones(np.broadcast_shapes(np.shape(s), np.shape(t)))


def zero(s, t):
    return np.zeros(np.broadcast_shapes(np.shape(s), np.shape(t)))


def s_minus_t(s, t):
    return s - t


# -- second kind ----------------------------------------------------------


def test_zero_kernel_returns_rhs():
    sol = solve_second_kind(SecondKindProblem(0.0, 1.0, zero, np.cos, 33))
    np.testing.assert_array_equal(sol.values, np.cos(sol.s))


def test_exponential_solution():
    sol = solve_second_kind(SecondKindProblem(0.0, 1.0, one, 1.0, 513))
    err = np.max(np.abs(sol.values - np.exp(-sol.s)))
    assert err <= 1e-4
    assert sol.error == pytest.approx(err, rel=0.2)


def test_sine_solution():
    sol = solve_second_kind(SecondKindProblem(0.0, 1.0, s_minus_t, lambda s: s, 513))
    assert np.max(np.abs(sol.values - np.sin(sol.s))) <= 1e-4


def test_second_order_convergence():
    errs = []
    for N in (65, 129, 257, 513):
        sol = solve_second_kind(SecondKindProblem(0.0, 1.0, s_minus_t, lambda s: s, N))
        errs.append(np.max(np.abs(sol.values - np.sin(sol.s))))
    ratios = np.array(errs[:-1]) / np.array(errs[1:])
    assert np.all(ratios >= 3.5)


def test_singular_step_reports_node():
    with pytest.raises(SingularStepError, match="node 1"):
        solve_second_kind(SecondKindProblem(0.0, 1.0, lambda s, t: -2.0 / 0.5 + 0 * s, 1.0, 3))


def test_residual_within_ten_times_estimate():
    """Substitute the solution back into the equation with scipy quadrature."""
    sol = solve_second_kind(SecondKindProblem(0.0, 1.0, lambda s, t: np.cos(s - t), np.exp, 257))
    spline = CubicSpline(sol.s, sol.values)
    worst = 0.0
    for s in np.linspace(0.1, 1.0, 10):
        integral = quad(lambda t: math.cos(s - t) * spline(t), 0.0, s, epsabs=1e-14)[0]
        worst = max(worst, abs(float(spline(s)) + integral - math.exp(s)))
    assert worst <= 10 * sol.error


# -- first kind -----------------------------------------------------------


def test_first_kind_constant_kernel():
    s = np.linspace(0.0, 1.0, 65)
    sol = solve_first_kind(one, lambda x: x, s, K_s=zero)
    np.testing.assert_allclose(sol.values, 1.0, atol=1e-12)


def test_first_kind_against_closed_form():
    s = np.linspace(0.0, 1.0, 257)
    sol = solve_first_kind(lambda x, t: 1 + x - t, lambda x: np.exp(x) - 1, s, K_s=one)
    # int_0^s (1+s-t) cosh t dt = e^s - 1
    assert np.max(np.abs(sol.values - np.cosh(s))) <= 1e-6


@pytest.mark.parametrize("N", [17, 33, 64])
def test_first_kind_matches_dense_collocation(N):
    """Oracle: the differentiated equation assembled as a dense lower-triangular system."""
    s = np.linspace(0.0, 1.0, N)
    h = s[1] - s[0]
    sol = solve_first_kind(lambda x, t: 1 + x - t, lambda x: np.exp(x) - 1, s, K_s=one,
                           f_prime=np.exp)
    A = np.zeros((N, N))
    for i in range(N):
        A[i, i] = 1.0  # K(s, s) = 1
        if i > 0:
            w = np.full(i + 1, h)
            w[0] = w[-1] = h / 2
            A[i, : i + 1] += w  # K_s = 1
    dense = np.linalg.solve(A, np.exp(s))
    assert np.max(np.abs(sol.values - dense)) <= 1e-8


def test_first_kind_numerical_derivatives_warn():
    s = np.linspace(0.0, 1.0, 129)
    with pytest.warns(UserWarning):
        sol = solve_first_kind(lambda x, t: 1 + x - t, np.exp(s) - 1, s)
    assert np.max(np.abs(sol.values - np.cosh(s))) <= 1e-5


def test_first_kind_diagonal_degeneracy():
    s = np.linspace(0.0, 1.0, 33)
    with pytest.raises(DiagonalDegeneracyError):
        solve_first_kind(s_minus_t, s**2 / 2, s, K_s=one)


def test_first_kind_incompatible_data():
    s = np.linspace(0.0, 1.0, 33)
    with pytest.raises(IncompatibleDataError):
        solve_first_kind(one, s + 1.0, s, K_s=zero)


# -- Abel -----------------------------------------------------------------


def test_abel_constant_solution():
    sol = solve_abel(AbelProblem(0.0, 1.0, 0.5, one, lambda s: 2 * np.sqrt(s), 513, G_s=zero))
    assert np.max(np.abs(sol.values - 1.0)) <= 1e-3


def test_abel_linear_solution():
    sol = solve_abel(AbelProblem(0.0, 1.0, 0.5, one, lambda s: 4 / 3 * s**1.5, 257, G_s=zero))
    assert np.max(np.abs(sol.values - sol.s)) <= 1e-3


def test_abel_from_sampled_data():
    s = np.linspace(0.0, 1.0, 257)
    sol = solve_abel(AbelProblem(0.0, 1.0, 0.5, one, 4 / 3 * s**1.5, 257, G_s=zero))
    assert np.max(np.abs(sol.values - s)) <= 1e-2


@pytest.mark.parametrize("alpha", [0.25, 0.75])
def test_abel_other_exponents(alpha):
    # int_0^s (s-t)^{-alpha} dt = s^{1-alpha} / (1-alpha)
    f = lambda s: s ** (1 - alpha) / (1 - alpha)
    sol = solve_abel(AbelProblem(0.0, 1.0, alpha, one, f, 257, G_s=zero))
    assert np.max(np.abs(sol.values - 1.0)) <= 1e-3


def test_abel_rejects_bad_alpha():
    with pytest.raises(ValueError):
        AbelProblem(0.0, 1.0, 1.0, one, 0.0, 33)


# -- diagonal-vanishing reduction -----------------------------------------


def test_reduction_m2():
    s = np.linspace(0.0, 1.0, 257)
    p = reduce_diagonal_vanishing([s_minus_t, one, zero], lambda x: x**2 / 2, s, 2, f_derivs=[lambda x: x, np.ones_like])
    sol = solve_second_kind(p)
    assert np.max(np.abs(sol.values - 1.0)) <= 1e-8


def test_reduction_m3():
    s = np.linspace(0.0, 1.0, 257)
    derivs = [lambda x, t: (x - t) ** 2 / 2, s_minus_t, one, zero]
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        p = reduce_diagonal_vanishing(derivs, s**3 / 6, s, 3)
    sol = solve_second_kind(p)
    assert np.max(np.abs(sol.values - 1.0)) <= 1e-6


def test_reduction_refuses_nonvanishing_low_derivative():
    s = np.linspace(0.0, 1.0, 33)
    with pytest.raises(ValueError):
        reduce_diagonal_vanishing([one, one, zero], s, s, 2)


# -- homogeneity ----------------------------------------------------------


def test_all_solvers_homogeneous():
    s = np.linspace(0.0, 1.0, 65)
    z = np.zeros_like(s)
    outs = [
        solve_second_kind(SecondKindProblem(0.0, 1.0, one, z, 65)).values,
        solve_first_kind(lambda x, t: 1 + x - t, z, s, K_s=one).values,
        solve_abel(AbelProblem(0.0, 1.0, 0.5, one, z, 65, G_s=zero)).values,
        solve_second_kind(reduce_diagonal_vanishing([s_minus_t, one, zero], z, s, 2)).values,
    ]
    eq = KernelEquation(4, phase_profile(4, 2.0), s[1:], z[1:].astype(complex))
    reduced = reduce_even_step(eq)
    assert not np.any(reduced.rhs)
    outs.append(solve_kernel_equation(reduced)[1])
    for out in outs:
        assert np.max(np.abs(out)) <= 1e-12


# -- even-step reduction --------------------------------------------------


def test_even_step_profiles():
    eq = KernelEquation(4, constant_profile(1.0), np.linspace(0.1, 1, 10), np.zeros(10))
    red = reduce_even_step(eq)
    assert red.n == 2
    np.testing.assert_allclose(red.H(np.linspace(0, 2, 5)), 1.0)
    red = reduce_even_step(KernelEquation(4, cosine_profile(1.0), eq.s_grid, eq.rhs))
    x = np.linspace(0, 2, 9)
    np.testing.assert_allclose(red.H(x), -x * np.sin(x) + np.cos(x), atol=1e-13)


def _kernel_integral(s, F, P, n, p=0):
    """``int_0^s u^p F(u) P(su-u^2) (su-u^2)^{(n-3)/2} du`` with an algebraic-weight quad."""
    e = (n - 3) / 2
    val, _ = quad(lambda u: u**p * F(u) * P.dq(s * u - u * u), 0.0, s, weight="alg", wvar=(e, e),
                  epsabs=1e-14, epsrel=1e-12, limit=200)
    return val


@pytest.mark.parametrize("n_low,profile", [
    (2, cosine_profile(3.0, 2.0)),
    (2, constant_profile(1.0)),
    (4, phase_profile(6, 2.5)),
    (4, phase_profile(6, 0.0)),
])
def test_even_step_constant(n_low, profile):
    """d/ds of the n+2 integral equals the reduced integral with multiplier (u/2) H_1."""
    F = lambda u: float(smooth_bump(u, 0.2, 0.8))
    H1 = EvenStepProfile(profile, n_low)
    step = 1e-3
    for s in (0.5, 0.9, 1.3):
        vals = [_kernel_integral(s + k * step, F, profile, n_low + 2) for k in (-2, -1, 1, 2)]
        deriv = (vals[0] - 8 * vals[1] + 8 * vals[2] - vals[3]) / (12 * step)
        reduced = _kernel_integral(s, lambda u: 0.5 * u * F(u), H1, n_low)
        assert deriv == pytest.approx(reduced, rel=1e-4)


def test_grid_derivative_fourth_order():
    errs = []
    for N in (33, 65):
        x = np.linspace(0, 1, N)
        errs.append(np.max(np.abs(grid_derivative(np.sin(x), x[1] - x[0]) - np.cos(x))))
    assert errs[0] / errs[1] > 12
