"""One-dimensional Volterra and generalized Abel equations on uniform grids.

Second-kind equations are stepped with the trapezoid rule.  First-kind
equations are differentiated once (or ``m`` times when the kernel vanishes
on the diagonal) to reach second-kind form.  Abel equations are first
smoothed by the fractional integral ``int (x-s)^{alpha-1} . ds``, which
turns the weakly singular kernel into a regular one with nonzero diagonal.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from math import comb, factorial
from typing import Callable, Sequence, Union

import numpy as np

from .errors import (
    DiagonalDegeneracyError,
    IncompatibleDataError,
    OrderLossWarning,
    SingularStepError,
)
from .slice_fourier import KernelEquation
from .special import EvenStepProfile, gauss_jacobi

Kernel = Callable[[np.ndarray, np.ndarray], np.ndarray]
RHS = Union[Callable[[np.ndarray], np.ndarray], np.ndarray]

DIAGONAL_TOL = 1e-10
COMPATIBILITY_TOL = 1e-8


@dataclass(frozen=True)
class VolterraSolution:
    s: np.ndarray
    values: np.ndarray
    error: float
    """Richardson estimate ``max |phi_h - phi_2h| / 3`` (0 when the grid cannot be halved)."""


@dataclass(frozen=True)
class SecondKindProblem:
    """``phi(s) + int_a^s K(s,t) phi(t) dt = f(s)`` on ``grid_n`` uniform nodes."""

    a: float
    b: float
    K: Kernel
    f: RHS
    grid_n: int

    def __post_init__(self) -> None:
        if not self.a < self.b:
            raise ValueError("need a < b")
        if self.grid_n < 2:
            raise ValueError("need at least 2 grid nodes")

    @property
    def grid(self) -> np.ndarray:
        return np.linspace(self.a, self.b, self.grid_n)


@dataclass(frozen=True)
class AbelProblem:
    """``int_a^s G(s,t) (s-t)^{-alpha} phi(t) dt = f(s)``."""

    a: float
    b: float
    alpha: float
    G: Kernel
    f: RHS
    grid_n: int
    G_s: Kernel | None = None

    def __post_init__(self) -> None:
        if not self.a < self.b:
            raise ValueError("need a < b")
        if not 0.0 < self.alpha < 1.0:
            raise ValueError(f"alpha must lie in (0, 1), got {self.alpha}")
        if self.grid_n < 5:
            raise ValueError("need at least 5 grid nodes")

    @property
    def grid(self) -> np.ndarray:
        return np.linspace(self.a, self.b, self.grid_n)


# -- helpers ----------------------------------------------------------------


def _samples(f: RHS, s: np.ndarray) -> np.ndarray:
    vals = f(s) if callable(f) else f
    vals = np.asarray(vals)
    vals = np.broadcast_to(vals, s.shape) if vals.ndim == 0 else vals
    if vals.shape != s.shape:
        raise ValueError(f"right-hand side has {vals.shape} samples for {s.shape} nodes")
    if not np.all(np.isfinite(vals)):
        raise ValueError("right-hand side is not finite on the grid")
    return vals


def _uniform_step(s: np.ndarray) -> float:
    s = np.asarray(s, dtype=float)
    if s.ndim != 1 or len(s) < 2:
        raise ValueError("grid must be 1-d with at least 2 nodes")
    h = (s[-1] - s[0]) / (len(s) - 1)
    if not h > 0 or np.max(np.abs(np.diff(s) - h)) > 1e-9 * max(h, abs(s[-1])):
        raise ValueError("grid must be uniform and increasing")
    return float(h)


def grid_derivative(values: np.ndarray, h: float) -> np.ndarray:
    """Fourth-order finite-difference derivative of uniform samples (needs >= 5 nodes)."""
    f = np.asarray(values)
    if len(f) < 5:
        raise ValueError("need at least 5 samples for a fourth-order derivative")
    d = np.empty_like(f)
    d[2:-2] = (f[:-4] - 8 * f[1:-3] + 8 * f[3:-1] - f[4:]) / (12 * h)
    d[0] = (-25 * f[0] + 48 * f[1] - 36 * f[2] + 16 * f[3] - 3 * f[4]) / (12 * h)
    d[1] = (-3 * f[0] - 10 * f[1] + 18 * f[2] - 6 * f[3] + f[4]) / (12 * h)
    d[-1] = (25 * f[-1] - 48 * f[-2] + 36 * f[-3] - 16 * f[-4] + 3 * f[-5]) / (12 * h)
    d[-2] = (3 * f[-1] + 10 * f[-2] - 18 * f[-3] + 6 * f[-4] - f[-5]) / (12 * h)
    return d


def _kernel_s_derivative(K: Kernel, step: float) -> Kernel:
    def K_s(s, t):
        return (K(s - 2 * step, t) - 8 * K(s - step, t) + 8 * K(s + step, t) - K(s + 2 * step, t)) / (12 * step)

    return K_s


def _matrix(K: Kernel, s: np.ndarray) -> np.ndarray:
    S, T = np.meshgrid(s, s, indexing="ij")
    M = np.asarray(K(S, T))
    return np.broadcast_to(M, S.shape).astype(np.result_type(M, float)) if M.ndim < 2 else M


def trapezoid_second_kind(s: np.ndarray, Kmat: np.ndarray, fvals: np.ndarray) -> np.ndarray:
    """Trapezoid stepping for ``phi + int_a^s K phi = f`` given ``Kmat[i, j] = K(s_i, s_j)``."""
    h = _uniform_step(s)
    N = len(s)
    phi = np.zeros(N, dtype=np.result_type(Kmat, fvals, float))
    if not np.any(fvals):
        return phi
    phi[0] = fvals[0]
    for k in range(1, N):
        row = Kmat[k, :k]
        acc = 0.5 * row[0] * phi[0] + row[1:] @ phi[1:k]
        denom = 1.0 + 0.5 * h * Kmat[k, k]
        if abs(denom) < 1e-12:
            raise SingularStepError(f"trapezoid step is singular at node {k} (s={s[k]:.6g})")
        phi[k] = (fvals[k] - h * acc) / denom
    return phi


def dense_second_kind(s: np.ndarray, Kmat: np.ndarray, fvals: np.ndarray) -> np.ndarray:
    """The trapezoid discretization assembled as one lower-triangular system."""
    h = _uniform_step(s)
    N = len(s)
    W = np.tril(np.full((N, N), h))
    W[:, 0] *= 0.5
    W[np.arange(N), np.arange(N)] = 0.5 * h
    W[0, 0] = 0.0
    A = np.eye(N) + W * Kmat
    return np.linalg.solve(A, fvals)


def _richardson(s, Kmat, fvals, phi) -> float:
    if len(s) < 5 or (len(s) - 1) % 2:
        return 0.0
    coarse = trapezoid_second_kind(s[::2], Kmat[::2, ::2], fvals[::2])
    return float(np.max(np.abs(phi[::2] - coarse)) / 3.0)


# -- second kind ------------------------------------------------------------


def solve_second_kind(p: SecondKindProblem) -> VolterraSolution:
    s = p.grid
    Kmat = _matrix(p.K, s)
    fvals = _samples(p.f, s)
    if not np.all(np.isfinite(Kmat)):
        raise ValueError("kernel is not finite on the grid")
    phi = trapezoid_second_kind(s, Kmat, fvals)
    return VolterraSolution(s, phi, _richardson(s, Kmat, fvals, phi))


# -- first kind -------------------------------------------------------------


def _check_compatible(fvals: np.ndarray) -> None:
    scale = max(1.0, float(np.max(np.abs(fvals))))
    if abs(fvals[0]) > COMPATIBILITY_TOL * scale:
        raise IncompatibleDataError(
            f"first-kind data must vanish at the left end, got f(a)={fvals[0]!r}")


def _first_kind_discrete(s, Kdiag, Ks_mat, fprime) -> VolterraSolution:
    if np.min(np.abs(Kdiag)) < DIAGONAL_TOL:
        i = int(np.argmin(np.abs(Kdiag)))
        raise DiagonalDegeneracyError(
            f"|K(s,s)| = {abs(Kdiag[i]):.3e} at s={s[i]:.6g}; use reduce_diagonal_vanishing "
            "or the Abel route")
    K2 = Ks_mat / Kdiag[:, None]
    f2 = fprime / Kdiag
    psi = trapezoid_second_kind(s, K2, f2)
    return VolterraSolution(s, psi, _richardson(s, K2, f2, psi))


def solve_first_kind(K: Kernel, f: RHS, grid: np.ndarray, *, K_s: Kernel | None = None,
                     f_prime: RHS | None = None) -> VolterraSolution:
    """``int_a^s K(s,t) psi(t) dt = f(s)`` with ``K(s,s) != 0``.

    Differentiating gives ``K(s,s) psi(s) + int_a^s K_s(s,t) psi(t) dt = f'(s)``.
    Missing derivatives are taken by fourth-order finite differences.
    """
    s = np.asarray(grid, dtype=float)
    h = _uniform_step(s)
    fvals = _samples(f, s)
    _check_compatible(fvals)
    Kdiag = np.asarray(K(s, s)) * np.ones_like(s)
    if np.min(np.abs(Kdiag)) < DIAGONAL_TOL:
        return _first_kind_discrete(s, Kdiag, None, None)
    if f_prime is not None:
        fprime = _samples(f_prime, s)
    else:
        fprime = grid_derivative(fvals, h) if np.any(fvals) else np.zeros_like(fvals)
    if K_s is None:
        warnings.warn("kernel derivative taken by finite differences", OrderLossWarning, stacklevel=2)
        K_s = _kernel_s_derivative(K, h)
    return _first_kind_discrete(s, Kdiag, _matrix(K_s, s), fprime)


# -- generalized Abel -------------------------------------------------------


def fractional_integral(fvals: np.ndarray, h: float, beta: float) -> np.ndarray:
    """``int_a^{s_k} (s_k - t)^{beta-1} f(t) dt`` for piecewise-linear ``f`` (exact moments)."""
    N = len(fvals)
    out = np.zeros(N, dtype=np.result_type(fvals, float))
    if not np.any(fvals):
        return out
    b1 = beta + 1.0
    for k in range(1, N):
        w = np.empty(k + 1)
        j = np.arange(1, k)
        d = k - j
        w[1:k] = (d + 1.0) ** b1 - 2.0 * d**b1 + (d - 1.0) ** b1
        w[0] = (k - 1.0) ** b1 - (k - 1.0 - beta) * k**beta
        w[k] = 1.0
        out[k] = w @ fvals[: k + 1]
    return out * h**beta / (beta * b1)


def _fractional_integral_callable(f: Callable, s: np.ndarray, alpha: float, nodes: int) -> np.ndarray:
    """Fractional integral of a callable, written for data behaving like ``(s-a)^{1-alpha}``.

    Abel data from a smooth solution has that endpoint behaviour, so the
    weight ``(1-y)^{alpha-1} (1+y)^{1-alpha}`` leaves a smooth integrand.
    """
    y, w = gauss_jacobi(nodes, alpha - 1.0, 1.0 - alpha)
    a = s[0]
    L = s[1:] - a
    sig = a + L[:, None] * (0.5 * (1.0 + y))[None, :]
    vals = np.asarray(f(sig)) * (sig - a) ** (alpha - 1.0)
    out = np.zeros(len(s), dtype=np.result_type(vals, float))
    out[1:] = 0.5 * L * (vals @ w)
    return out


def _smoothed_kernels(G: Kernel, G_s: Kernel, s: np.ndarray, alpha: float, nodes: int):
    """``Kt(x,t) = int_t^x G(s,t) (x-s)^{alpha-1} (s-t)^{-alpha} ds`` and ``d/dx Kt`` on the grid."""
    y, w = gauss_jacobi(nodes, alpha - 1.0, -alpha)
    X, T = np.meshgrid(s, s, indexing="ij")
    lower = X >= T
    Xl, Tl = X[lower], T[lower]
    S = Tl[:, None] + (Xl - Tl)[:, None] * (0.5 * (1.0 + y))[None, :]
    Tb = np.broadcast_to(Tl[:, None], S.shape)
    Kt = np.zeros(X.shape, dtype=complex)
    Kx = np.zeros(X.shape, dtype=complex)
    Kt[lower] = np.asarray(G(S, Tb)) @ w
    Kx[lower] = np.asarray(G_s(S, Tb)) @ (w * 0.5 * (1.0 + y))
    if not np.any(Kt.imag) and not np.any(Kx.imag):
        return Kt.real, Kx.real
    return Kt, Kx


def solve_abel(p: AbelProblem, jacobi_nodes: int = 24) -> VolterraSolution:
    """Solve the generalized Abel equation by fractional smoothing.

    Applying ``int_a^x (x-s)^{alpha-1} . ds`` to both sides yields
    ``int_a^x Kt(x,t) phi(t) dt = Phi(x)`` with ``Kt(x,x) = G(x,x) pi / sin(pi alpha)``.
    """
    s = p.grid
    h = _uniform_step(s)
    fvals = _samples(p.f, s)
    _check_compatible(fvals)
    if not np.any(fvals):
        return VolterraSolution(s, np.zeros_like(fvals, dtype=np.result_type(fvals, float)), 0.0)
    gdiag = np.asarray(p.G(s, s)) * np.ones_like(s)
    if np.min(np.abs(gdiag)) < DIAGONAL_TOL:
        raise DiagonalDegeneracyError("G(s,s) vanishes on the grid")
    G_s = p.G_s
    if G_s is None:
        warnings.warn("Abel kernel derivative taken by finite differences", OrderLossWarning,
                      stacklevel=2)
        G_s = _kernel_s_derivative(p.G, h)
    if callable(p.f):
        Phi = _fractional_integral_callable(p.f, s, p.alpha, 4 * jacobi_nodes)
    else:
        Phi = fractional_integral(fvals, h, p.alpha)
    Kt, Kx = _smoothed_kernels(p.G, G_s, s, p.alpha, jacobi_nodes)
    return _first_kind_discrete(s, np.diag(Kt).copy(), Kx, grid_derivative(Phi, h))


# -- diagonal-vanishing kernels ---------------------------------------------


def reduce_diagonal_vanishing(K_derivs: Sequence[Kernel] | Kernel, f: RHS, grid: np.ndarray, m: int,
                              f_derivs: Sequence[RHS] | None = None) -> SecondKindProblem:
    """Second-kind form of ``int_a^s K psi = f`` when ``d^j K/ds^j`` vanishes on ``t = s`` for ``j <= m-2``.

    ``K_derivs[j]`` is ``d^j K / ds^j`` for ``j = 0..m``; a single callable is
    differentiated numerically.  Differentiating ``m`` times gives
    ``psi(s) + int_a^s K^{(m)}(s,t)/D(s) psi(t) dt = f^{(m)}(s)/D(s)`` with
    ``D(s) = K^{(m-1)}(s,s)``.
    """
    if m < 1:
        raise ValueError("m must be >= 1")
    s = np.asarray(grid, dtype=float)
    h = _uniform_step(s)
    if callable(K_derivs):
        warnings.warn("kernel derivatives taken by finite differences", OrderLossWarning, stacklevel=2)
        derivs = [K_derivs]
        for _ in range(m):
            derivs.append(_kernel_s_derivative(derivs[-1], h))
    else:
        derivs = list(K_derivs)
        if len(derivs) < m + 1:
            raise ValueError(f"need kernel derivatives of orders 0..{m}")
    D = np.asarray(derivs[m - 1](s, s)) * np.ones_like(s)
    if np.min(np.abs(D)) < DIAGONAL_TOL:
        i = int(np.argmin(np.abs(D)))
        raise DiagonalDegeneracyError(
            f"order-{m - 1} kernel derivative vanishes on the diagonal at s={s[i]:.6g}")
    fvals = _samples(f, s)
    scale = max(1.0, float(np.max(np.abs(D))))
    for j in range(m - 1):
        if np.max(np.abs(np.asarray(derivs[j](s, s)))) > 1e-8 * scale:
            raise ValueError(f"kernel derivative of order {j} does not vanish on the diagonal")
    _check_compatible(fvals)
    if f_derivs is not None and len(f_derivs) >= m:
        fm = _samples(f_derivs[m - 1], s)
    elif not np.any(fvals):
        fm = np.zeros_like(fvals)
    else:
        warnings.warn(f"order-{m} data derivative taken numerically", OrderLossWarning, stacklevel=2)
        fm = fvals
        for _ in range(m):
            fm = grid_derivative(fm, h)
    Km = derivs[m]

    def reduced_kernel(S, T, _Km=Km, _s=s, _D=D):
        return _Km(S, T) / np.interp(S, _s, _D)

    return SecondKindProblem(float(s[0]), float(s[-1]), reduced_kernel, fm / D, len(s))


# -- kernel equations -------------------------------------------------------


def reduce_even_step(eq: KernelEquation) -> KernelEquation:
    """Lower an even-dimensional kernel equation from ``n+2`` to ``n``.

    ``d/ds`` of the ``n+2`` equation is
    ``int_0^s u^p F(u) (u/2) H_1(w) (su-u^2)^{(n-3)/2} du = rhs'(s)`` with
    ``w = sqrt(su - u^2)`` and ``H_1(x) = x H'(x) + (n-1) H(x)``; the factor
    ``u`` joins the unknown and the 1/2 moves to the right-hand side.
    """
    if eq.n < 4 or eq.n % 2:
        raise ValueError(f"even-step reduction needs even n >= 4, got n={eq.n}")
    s = np.concatenate([[0.0], eq.s_grid])
    h = _uniform_step(s)
    rhs = np.concatenate([[0.0], eq.rhs])
    if np.any(rhs):
        if len(s) < 5:
            raise ValueError("right-hand side too short to differentiate")
        drhs = 2.0 * grid_derivative(rhs, h)[1:]
    else:
        drhs = np.zeros_like(eq.rhs)
    n = eq.n - 2
    return KernelEquation(n, EvenStepProfile(eq.H, n), eq.s_grid, drhs,
                          unknown_power=eq.unknown_power + 1,
                          unknown_name=f"u*{eq.unknown_name}")


def _odd_kernel_derivs(P, k: int, m: int) -> list[Kernel]:
    """``d^j/ds^j [P(st - t^2) (s-t)^k]`` for ``j = 0..m``."""

    def make(j):
        def K(S, T):
            S, T = np.asarray(S, float), np.asarray(T, float)
            q = np.maximum(S * T - T * T, 0.0)
            out = np.zeros(np.broadcast_shapes(S.shape, T.shape))
            for i in range(j + 1):
                l = j - i
                if l > k:
                    continue
                out = out + comb(j, i) * T**i * P.dq(q, i) * (factorial(k) / factorial(k - l)) * (S - T) ** (k - l)
            return out

        return K

    return [make(j) for j in range(m + 1)]


def solve_kernel_equation(eq: KernelEquation) -> tuple[np.ndarray, np.ndarray, float]:
    """Solve for ``F`` on ``eq.s_grid``; returns ``(u, F, error estimate)``.

    Routes: ``n = 2`` generalized Abel with ``alpha = 1/2``; odd ``n = 2k+3``
    first kind in ``t^k u^p F`` with kernel ``H(w)(s-t)^k`` (differentiated
    ``k+1`` times); even ``n >= 4`` lowered by :func:`reduce_even_step`.
    """
    n, P, p = eq.n, eq.H, eq.unknown_power
    s = np.concatenate([[0.0], eq.s_grid])
    _uniform_step(s)
    rhs = np.concatenate([[0.0], eq.rhs])
    u = eq.s_grid
    if not np.any(rhs):
        return u, np.zeros(len(u), complex), 0.0

    def G(S, T):
        return P.dq(np.maximum(S * T - T * T, 0.0))

    def G_s(S, T):
        return T * P.dq(np.maximum(S * T - T * T, 0.0), 1)

    if n == 2:
        sol = solve_abel(AbelProblem(0.0, float(s[-1]), 0.5, G, rhs, len(s), G_s=G_s))
        # phi = t^{-1/2} * t^p F
        return u, sol.values[1:] * u ** (0.5 - p), sol.error
    if n % 2 == 0:
        F_u, F, err = solve_kernel_equation(reduce_even_step(eq))
        return F_u, F, err
    k = (n - 3) // 2
    if k == 0:
        sol = solve_first_kind(G, rhs, s, K_s=G_s)
    else:
        derivs = _odd_kernel_derivs(P, k, k + 1)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", OrderLossWarning)
            problem = reduce_diagonal_vanishing(derivs, rhs, s, k + 1)
        sol = solve_second_kind(problem)
    # psi = t^{k+p} F
    return u, sol.values[1:] / u ** (k + p), sol.error
