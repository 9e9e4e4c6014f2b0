"""Fourier reduction in the horizontal variable.

Taking the Fourier transform in ``x'`` of sphere-horocycle data collapses
the transform to a one-dimensional equation in the height ``u``::

    g(eta', r) = r int_0^{2r} f~(eta', u) u^{1-n} J(sqrt(2ur - u^2)|eta'|) (2ur - u^2)^{(n-3)/2} du

With ``s = 2r`` and ``F(u) = f~(eta', u) / u^{n-1}`` this is the kernel
equation ``int_0^s F(u) H(sqrt(su - u^2)) (su - u^2)^{(n-3)/2} du = g(eta', s/2) / (s/2)``
with ``H(x) = J(x |eta'|)``.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, replace
from typing import Sequence

import numpy as np

from .errors import DiagonalDegeneracyError, TruncationWarning
from .special import Profile, gauss_jacobi, phase_profile, sphere_phase_integral, sphere_rule
from .transform import (
    DecayFunction,
    Estimate,
    QuadratureSpec,
    _sphere_v_range,
    horizontal_cutoff,
    horizontal_tail,
    plane_rule,
)

__all__ = [
    "KernelEquation",
    "SliceData",
    "assemble_kernel_equation",
    "exterior_data",
    "exterior_data_from_slices",
    "fourier_slice",
    "fourier_slices",
    "sphere_phase_integral",
]

_CHUNK = 1 << 21


@dataclass(frozen=True)
class SliceData:
    """Samples of ``f~(eta', u)`` for one frequency."""

    eta: tuple[float, ...]
    u_grid: np.ndarray
    values: np.ndarray

    def __post_init__(self) -> None:
        u = np.asarray(self.u_grid, dtype=float)
        v = np.asarray(self.values, dtype=complex)
        if u.ndim != 1 or u.shape != v.shape:
            raise ValueError("u_grid and values must be 1-d arrays of equal length")
        if np.any(u <= 0) or np.any(np.diff(u) <= 0):
            raise ValueError("u_grid must be positive and strictly increasing")
        if not np.all(np.isfinite(v)):
            raise ValueError("slice values must be finite")
        object.__setattr__(self, "eta", tuple(float(e) for e in self.eta))
        object.__setattr__(self, "u_grid", u)
        object.__setattr__(self, "values", v)

    @property
    def n(self) -> int:
        return len(self.eta) + 1

    def normalized(self) -> np.ndarray:
        """``f~ / u^{n-1}``, the quantity that stays continuous at ``u = 0``."""
        return self.values / self.u_grid ** (self.n - 1)


@dataclass(frozen=True)
class KernelEquation:
    """``int_0^s u^p F(u) H(sqrt(su-u^2)) (su-u^2)^{(n-3)/2} du = rhs(s)`` on ``s_grid``.

    ``unknown_power`` is ``p``; it is 0 for an assembled equation and grows
    by one per even-dimension reduction step.  ``s_grid`` must be uniform with
    first node equal to the spacing, so that prepending ``s = 0`` (where the
    right-hand side vanishes) keeps it uniform.
    """

    n: int
    H: Profile
    s_grid: np.ndarray
    rhs: np.ndarray
    unknown_power: int = 0
    unknown_name: str = "F"

    def __post_init__(self) -> None:
        s = np.asarray(self.s_grid, dtype=float)
        rhs = np.asarray(self.rhs, dtype=complex)
        if self.n < 2:
            raise ValueError("kernel equation needs n >= 2")
        if s.ndim != 1 or s.shape != rhs.shape:
            raise ValueError("s_grid and rhs must be aligned 1-d arrays")
        if np.any(s <= 0) or np.any(np.diff(s) <= 0):
            raise ValueError("s_grid must be positive and increasing")
        if abs(self.H.at_zero()) <= 1e-12:
            raise DiagonalDegeneracyError("kernel profile has H(0) = 0")
        object.__setattr__(self, "s_grid", s)
        object.__setattr__(self, "rhs", rhs)

    @property
    def exponent(self) -> float:
        return (self.n - 3) / 2

    @property
    def h0(self) -> float:
        return self.H.at_zero()

    def kernel(self, s, u) -> np.ndarray:
        """``H(sqrt(su-u^2)) (su-u^2)^{(n-3)/2}`` for ``0 < u < s``."""
        q = np.maximum(np.asarray(s) * np.asarray(u) - np.asarray(u) ** 2, 0.0)
        return self.H.dq(q) * q**self.exponent

    def is_homogeneous(self) -> bool:
        return not np.any(self.rhs)


def fourier_slices(f: DecayFunction, eta: Sequence[float], u, q: QuadratureSpec = QuadratureSpec(),
                   cutoff: float | None = None) -> tuple[np.ndarray, float]:
    """``f~(eta', u)`` for an array of heights; returns ``(values, tail bound)``."""
    n = f.n
    eta = np.asarray(eta, dtype=float)
    if eta.shape != (n - 1,):
        raise ValueError(f"eta must have length {n - 1}")
    u = np.atleast_1d(np.asarray(u, dtype=float))
    if np.any(u <= 0):
        raise ValueError("heights must be positive")
    umax = float(u.max())
    R = cutoff or q.plane_cutoff or horizontal_cutoff(f, umax, q.tail_tol)
    tail = horizontal_tail(f, umax, R)
    if tail > q.tail_tol * (1.0 + 1e-9):
        warnings.warn(f"{f.name}: Fourier tail bound {tail:.2e} above {q.tail_tol:.1e}",
                      TruncationWarning, stacklevel=2)
    xp, w = plane_rule(n, R, q.plane_nodes, q.sphere_nodes)
    kernel = w * np.exp(-1j * (xp @ eta))
    out = np.empty(u.shape, dtype=complex)
    step = max(1, _CHUNK // len(w))
    for i in range(0, len(u), step):
        uu = u[i:i + step]
        vals = f(xp[None, :, :], uu[:, None])
        out[i:i + step] = vals @ kernel
    return out, tail


def fourier_slice(f: DecayFunction, eta: Sequence[float], u: float,
                  q: QuadratureSpec = QuadratureSpec()) -> Estimate:
    """Truncated Fourier integral of ``x' -> f(x', u)`` at frequency ``eta``."""
    vals, tail = fourier_slices(f, eta, [u], q)
    coarse = replace(q, plane_nodes=max(2, q.plane_nodes // 2))
    R = q.plane_cutoff or horizontal_cutoff(f, u, q.tail_tol)
    vals2, _ = fourier_slices(f, eta, [u], coarse, cutoff=R)
    return Estimate(complex(vals[0]), abs(vals[0] - vals2[0]) + tail, tail)


def sphere_transform_batch(f: DecayFunction, contacts: np.ndarray, r: float,
                           q: QuadratureSpec) -> np.ndarray:
    """Sphere transforms at many contact points sharing one radius."""
    v_lo, v_hi, _ = _sphere_v_range(f, r, q.tail_tol)
    N = q.theta_nodes | 1
    v = np.linspace(v_lo, v_hi, N)
    h = v[1] - v[0]
    tw = np.full(N, h)
    tw[[0, -1]] *= 0.5
    pts, sw = sphere_rule(f.n - 2, q.sphere_nodes)
    sech = 1.0 / np.cosh(v)
    height = r * 2.0 / (1.0 + np.exp(2.0 * v))
    weight = tw * np.exp((f.n - 1) * v)
    offsets = r * sech[:, None, None] * pts[None, :, :]
    out = np.empty(len(contacts))
    step = max(1, _CHUNK // (N * len(sw)))
    for i in range(0, len(contacts), step):
        c = contacts[i:i + step]
        xp = c[:, None, None, :] + offsets[None]
        xn = np.broadcast_to(height[None, :, None], xp.shape[:-1])
        out[i:i + step] = (f(xp, xn) @ sw) @ weight
    return out


def exterior_data(f: DecayFunction, eta: Sequence[float], r_grid, q: QuadratureSpec = QuadratureSpec(),
                  contact_nodes: int | None = None) -> np.ndarray:
    """``g(eta', r) = int f^(Sphere(x', r)) exp(-i <x', eta'>) dx'`` for each ``r``.

    Computed literally: sphere transforms on a polar grid of contact points,
    then a truncated Fourier sum over the contacts.
    """
    n = f.n
    eta = np.asarray(eta, dtype=float)
    if eta.shape != (n - 1,):
        raise ValueError(f"eta must have length {n - 1}")
    r_grid = np.atleast_1d(np.asarray(r_grid, dtype=float))
    if np.any(r_grid <= 0) or 2.0 * r_grid.max() > 1.0 + 1e-12:
        raise ValueError("exterior data needs 0 < r <= 1/2")
    R = (q.plane_cutoff or horizontal_cutoff(f, 1.0, q.tail_tol)) + float(r_grid.max())
    contacts, w = plane_rule(n, R, contact_nodes or q.plane_nodes, q.sphere_nodes)
    phase = w * np.exp(-1j * (contacts @ eta))
    return np.array([sphere_transform_batch(f, contacts, float(r), q) @ phase for r in r_grid])


def exterior_data_from_slices(f: DecayFunction, eta: Sequence[float], r_grid,
                              q: QuadratureSpec = QuadratureSpec(), u_nodes: int = 96) -> np.ndarray:
    """Same quantity as :func:`exterior_data` through the height integral.

    ``u = r(1+y)`` turns ``(2ur - u^2)^{(n-3)/2}`` into a Gauss-Jacobi
    weight, so the endpoint behaviour for ``n = 2`` is integrated exactly.
    """
    n = f.n
    eta = np.asarray(eta, dtype=float)
    r_grid = np.atleast_1d(np.asarray(r_grid, dtype=float))
    a = (n - 3) / 2
    y, w = gauss_jacobi(u_nodes, a, a)
    u = r_grid[:, None] * (1.0 + y[None, :])
    ft, _ = fourier_slices(f, eta, u.ravel(), q, cutoff=q.plane_cutoff
                           or horizontal_cutoff(f, float(u.max()), q.tail_tol))
    ft = ft.reshape(u.shape)
    J = sphere_phase_integral(r_grid[:, None] * np.sqrt(1.0 - y**2)[None, :] * np.linalg.norm(eta), n)
    integrand = ft / u ** (n - 1) * J
    return r_grid ** (n - 1) * (integrand @ w)


def assemble_kernel_equation(eta: Sequence[float], n: int, s_grid, data=None,
                             H: Profile | None = None) -> KernelEquation:
    """Kernel equation for frequency ``eta`` from exterior data ``g(eta', s/2)``.

    ``data`` holds ``g`` at ``r = s/2`` (``None`` for the homogeneous case);
    the right-hand side is ``g / r``.
    """
    s = np.asarray(s_grid, dtype=float)
    if np.any(s <= 0) or s.max() > 1.0 + 1e-12:
        raise ValueError("s = 2r must lie in (0, 1]")
    eta = np.asarray(eta, dtype=float)
    if eta.shape != (n - 1,):
        raise ValueError(f"eta must have length {n - 1}")
    profile = H if H is not None else phase_profile(n, float(np.linalg.norm(eta)))
    rhs = np.zeros(s.shape, complex) if data is None else np.asarray(data, complex) / (s / 2.0)
    return KernelEquation(n, profile, s, rhs)
