"""Special functions and quadrature rules shared by the transform and solver code."""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy import special

_SERIES_CUTOFF = 2.0
_SERIES_TERMS = 30


def lambda_bessel(nu: float, z) -> np.ndarray:
    """``z^{-nu} J_nu(z)``, an entire even function of ``z`` (``nu >= -1/2``).

    Power series below ``|z| < 2``, scipy's ``jv`` above.
    """
    z = np.abs(np.asarray(z, dtype=float))
    out = np.empty_like(z)
    small = z < _SERIES_CUTOFF
    if np.any(small):
        w = -0.25 * z[small] ** 2
        term = np.full_like(w, 1.0 / math.gamma(nu + 1.0))
        acc = term.copy()
        for i in range(1, _SERIES_TERMS):
            term = term * w / (i * (nu + i))
            acc += term
        out[small] = acc * 2.0 ** (-nu)
    big = ~small
    if np.any(big):
        zb = z[big]
        out[big] = special.jv(nu, zb) / zb**nu
    return out


def sphere_area(k: int) -> float:
    """Surface measure of the unit sphere ``S_k`` in ``R^{k+1}`` (``S_0`` has measure 2)."""
    return 2.0 * math.pi ** ((k + 1) / 2) / math.gamma((k + 1) / 2)


def sphere_phase_integral(z, n: int) -> np.ndarray:
    """``J(z) = int_{S_{n-2}} exp(-i z <e, w>) dw`` for a unit vector ``e``.

    For ``n = 2`` this is the two-point sum ``2 cos z``; otherwise the
    half-integer Bessel identity ``(2 pi)^{(n-1)/2} z^{-nu} J_nu(z)`` with
    ``nu = (n-3)/2``.
    """
    if not 2 <= n <= 8:
        raise ValueError(f"dimension n={n} outside supported range [2, 8]")
    z = np.asarray(z, dtype=float)
    if n == 2:
        return 2.0 * np.cos(z)
    return (2.0 * math.pi) ** ((n - 1) / 2) * lambda_bessel((n - 3) / 2, z)


# -- even profiles ----------------------------------------------------------


class Profile:
    """An even smooth function ``H(x) = P(x^2)`` with access to ``P^{(j)}``.

    Kernels of the form ``H(sqrt(s u - u^2))`` are smooth in ``(s, u)``
    when written through ``P``, and their ``s``-derivatives follow from the
    chain rule ``d/ds P(su - u^2) = u P'(su - u^2)``.
    """

    def dq(self, q, j: int = 0) -> np.ndarray:
        raise NotImplementedError

    def __call__(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        return self.dq(x * x, 0)

    def at_zero(self) -> float:
        return float(self.dq(np.zeros(1), 0)[0])


@dataclass(frozen=True)
class BesselProfile(Profile):
    """``P(q) = scale * Lambda_nu(k sqrt(q))``.

    Covers the sphere phase integral (``nu = (n-3)/2``), cosines
    (``nu = -1/2``) and constants (``k = 0``).
    """

    nu: float
    k: float
    scale: float

    def dq(self, q, j: int = 0) -> np.ndarray:
        q = np.maximum(np.asarray(q, dtype=float), 0.0)
        factor = self.scale * (-0.5 * self.k**2) ** j
        if factor == 0.0:
            return np.zeros_like(q)
        return factor * lambda_bessel(self.nu + j, self.k * np.sqrt(q))


@dataclass(frozen=True)
class EvenStepProfile(Profile):
    """``H_1(x) = x H'(x) + (n - 1) H(x)`` for a parent profile ``H``.

    In the squared variable ``Q(q) = 2 q P'(q) + (n-1) P(q)`` and, by
    Leibniz, ``Q^{(j)} = 2 q P^{(j+1)} + (2j + n - 1) P^{(j)}``.
    """

    parent: Profile
    n: int

    def dq(self, q, j: int = 0) -> np.ndarray:
        q = np.asarray(q, dtype=float)
        return 2.0 * q * self.parent.dq(q, j + 1) + (2 * j + self.n - 1) * self.parent.dq(q, j)


@dataclass(frozen=True)
class CallableProfile(Profile):
    """Profile given by explicit callables ``derivs[j](q) = P^{(j)}(q)``."""

    derivs: tuple

    def dq(self, q, j: int = 0) -> np.ndarray:
        if j >= len(self.derivs):
            raise ValueError(f"profile derivative of order {j} not supplied")
        return np.broadcast_to(np.asarray(self.derivs[j](np.asarray(q, float)), float),
                               np.shape(q)).copy()


def phase_profile(n: int, eta_norm: float) -> Profile:
    """``H(x) = J(x |eta'|)`` as a profile."""
    if n == 2:
        return cosine_profile(eta_norm, 2.0)
    return BesselProfile((n - 3) / 2, float(eta_norm), (2.0 * math.pi) ** ((n - 1) / 2))


def cosine_profile(k: float, amplitude: float = 1.0) -> Profile:
    # cos z = sqrt(pi/2) * z^{1/2} J_{-1/2}(z)
    return BesselProfile(-0.5, float(k), amplitude * math.sqrt(math.pi / 2))


def constant_profile(c: float) -> Profile:
    return BesselProfile(0.0, 0.0, float(c))


# -- quadrature rules -------------------------------------------------------


@lru_cache(maxsize=64)
def gauss_legendre(n: int) -> tuple[np.ndarray, np.ndarray]:
    x, w = special.roots_legendre(n)
    return x, w


@lru_cache(maxsize=64)
def gauss_jacobi(n: int, alpha: float, beta: float) -> tuple[np.ndarray, np.ndarray]:
    """Nodes/weights on ``[-1, 1]`` for the weight ``(1-y)^alpha (1+y)^beta``."""
    x, w = special.roots_jacobi(n, alpha, beta)
    return x, w


@lru_cache(maxsize=64)
def sphere_rule(k: int, nodes: int) -> tuple[np.ndarray, np.ndarray]:
    """Quadrature on the unit sphere ``S_k`` in ``R^{k+1}``.

    ``S_0`` is the exact two-point rule; ``S_1`` the equispaced trapezoid
    rule with ``nodes`` points; for ``k >= 2`` Gauss-Legendre in each polar
    angle times a ``2*nodes`` point trapezoid rule in the azimuth.
    Returns ``(points (M, k+1), weights (M,))``.
    """
    if k == 0:
        return np.array([[1.0], [-1.0]]), np.array([1.0, 1.0])
    if nodes < 2:
        raise ValueError("sphere rule needs at least 2 nodes")
    m = nodes if k == 1 else 2 * nodes
    phi = 2.0 * math.pi * np.arange(m) / m
    pts = np.stack([np.cos(phi), np.sin(phi)], axis=-1)
    wts = np.full(m, 2.0 * math.pi / m)
    # Build up S_j from S_{j-1}: w = (cos t, sin t * w_prev), measure sin^j t dt dw_prev.
    for j in range(2, k + 1):
        y, gw = gauss_legendre(nodes)
        t = 0.5 * math.pi * (y + 1.0)
        tw = 0.5 * math.pi * gw * np.sin(t) ** (j - 1)
        new_pts = np.concatenate(
            [np.broadcast_to(np.cos(t)[:, None, None], (nodes, len(wts), 1)),
             np.sin(t)[:, None, None] * pts[None, :, :]],
            axis=-1,
        )
        pts = new_pts.reshape(-1, j + 1)
        wts = (tw[:, None] * wts[None, :]).ravel()
    pts.setflags(write=False)
    wts.setflags(write=False)
    return pts, wts
