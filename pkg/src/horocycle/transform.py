"""Forward horocycle transform ``f -> f^(xi)``.

Sphere horocycles are integrated slice by slice in the contact angle
``theta``; the substitution ``theta = 2 arctan(exp(-v))`` turns the measure
``(sin/(1-cos))^{n-2} dtheta/(1-cos)`` into ``exp((n-1) v) dv`` and moves
the contact point to ``v = +inf``, where the decay of ``f`` makes the
integrand exponentially small.  The trapezoid rule in ``v`` then converges
spectrally and the truncation points come from the decay certificate.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, replace
from functools import lru_cache
from typing import Callable, NamedTuple, Sequence

import numpy as np
from scipy.stats import qmc

from .errors import DecayOverflowError, NaNEncountered, NonIntegrableError, TruncationWarning
from .geometry import (
    HorizontalTranslation,
    PointH,
    distance_from_origin,
    sphere_to_plane_isometry,
)
from .special import gauss_legendre, sphere_area, sphere_rule

CERTIFICATE_BUDGET = 4096
CERTIFICATE_LOG_HEIGHT = 8.0
_LOG_MAX = math.log(np.finfo(float).max)


class Estimate(NamedTuple):
    """Quadrature value with an error estimate and the truncation tail bound."""

    value: complex | float
    error: float
    tail: float = 0.0


@dataclass(frozen=True)
class DecayFunction:
    """Scalar field on H^n with a claimed exponential decay order.

    ``func(x_prime, x_n)`` must accept stacked arrays (``x_prime`` of shape
    ``(..., n-1)``) and return an array of shape ``(...)``.  The claim is that
    ``sup |f(x)| exp(m d(0, x))`` is finite for every ``m <= decay_order``.
    """

    func: Callable[[np.ndarray, np.ndarray], np.ndarray]
    decay_order: float
    n: int
    name: str = "f"

    def __post_init__(self) -> None:
        if not self.decay_order > 0:
            raise ValueError("decay order must be positive")
        if not 2 <= self.n <= 8:
            raise ValueError(f"dimension n={self.n} outside [2, 8]")

    def __call__(self, x_prime, x_n) -> np.ndarray:
        x_prime = np.asarray(x_prime, dtype=float)
        x_n = np.asarray(x_n, dtype=float)
        if x_prime.shape[-1] != self.n - 1:
            raise ValueError(f"{self.name}: expected x' of length {self.n - 1}")
        with np.errstate(over="ignore", under="ignore"):
            vals = np.asarray(self.func(x_prime, x_n))
        vals = np.broadcast_to(vals, np.broadcast_shapes(x_prime.shape[:-1], x_n.shape))
        if np.isnan(vals).any():
            raise NaNEncountered(f"{self.name} returned NaN")
        return vals

    def evaluate(self, p: PointH) -> float:
        return float(self(np.asarray(p.x_prime), p.x_n))

    def compose(self, iso, name: str | None = None) -> DecayFunction:
        """``f o iso``.  Isometries shift ``d(0, .)`` by a bounded amount, so the order is kept."""
        func = self.func

        def composed(xp, xn):
            yp, yn = iso(xp, xn)
            return func(yp, yn)

        return replace(self, func=composed, name=name or f"{self.name}∘iso")


def zero_function(n: int) -> DecayFunction:
    return DecayFunction(lambda xp, xn: np.zeros(np.broadcast_shapes(xp.shape[:-1], np.shape(xn))),
                         decay_order=float("inf"), n=n, name="zero")


@dataclass(frozen=True)
class QuadratureSpec:
    theta_nodes: int = 256
    sphere_nodes: int = 32
    plane_cutoff: float | None = None
    plane_nodes: int = 256
    tail_tol: float = 1e-12

    def __post_init__(self) -> None:
        if min(self.theta_nodes, self.sphere_nodes, self.plane_nodes) < 2:
            raise ValueError("all node counts must be >= 2")
        if self.plane_cutoff is not None and not self.plane_cutoff > 0:
            raise ValueError("plane cutoff must be positive")
        if not self.tail_tol > 0:
            raise ValueError("tail tolerance must be positive")

    def refined(self) -> QuadratureSpec:
        return replace(self, theta_nodes=2 * self.theta_nodes, sphere_nodes=2 * self.sphere_nodes,
                       plane_nodes=2 * self.plane_nodes)


# -- decay certificate ------------------------------------------------------


@lru_cache(maxsize=16)
def _certificate_sample(n: int, budget: int) -> tuple[np.ndarray, np.ndarray]:
    pts = qmc.Halton(d=n, scramble=False).random(budget)
    L = CERTIFICATE_LOG_HEIGHT
    xn = np.exp(L * (2.0 * pts[:, 0] - 1.0))
    xp = np.sinh(L * (2.0 * pts[:, 1:] - 1.0))
    # The origin goes first: decay sups are often attained there.
    xp = np.vstack([np.zeros((1, n - 1)), xp])
    xn = np.concatenate([[1.0], xn])
    return xp, xn


def decay_certificate(f: DecayFunction, m: float, budget: int = CERTIFICATE_BUDGET) -> float:
    """Empirical ``sup |f(x)| exp(m d(0, x))`` over a deterministic Halton sample.

    Heights are log-uniform in ``[e^-8, e^8]``; horizontal coordinates are
    ``sinh``-spread over ``[-sinh 8, sinh 8]``.
    """
    if m > f.decay_order:
        raise ValueError(f"m={m} exceeds the declared decay order {f.decay_order}")
    return _certificate(f, float(m), int(budget))


@lru_cache(maxsize=256)
def _certificate(f: DecayFunction, m: float, budget: int) -> float:
    xp, xn = _certificate_sample(f.n, budget)
    vals = np.abs(f(xp, xn))
    with np.errstate(divide="ignore"):
        logs = np.log(vals) + m * distance_from_origin(xp, xn)
    i = int(np.argmax(logs))
    if logs[i] > _LOG_MAX:
        raise DecayOverflowError(
            f"{f.name}: |f| exp(m d) overflows at x'={xp[i].tolist()}, x_n={xn[i]!r}")
    if not np.isfinite(logs[i]):
        return 0.0
    return float(math.exp(logs[i]))


def _truncation_constant(f: DecayFunction) -> tuple[float, float]:
    """``(m, C)`` with ``|f| <= C exp(-m d(0, .))``; ``C`` floored at 1 for empty samples."""
    m = min(f.decay_order, 8.0 + f.n)
    c = decay_certificate(f, m)
    return m, (c if c > 0.0 else 1.0)


# -- sphere horocycles ------------------------------------------------------


def _sphere_v_range(f: DecayFunction, r: float, tol: float) -> tuple[float, float, float]:
    n = f.n
    m, c = _truncation_constant(f)
    area = sphere_area(n - 2)
    rate = 2.0 * m - n + 1.0
    # height 2r/(1+e^{2v}) gives d(0,x) >= 2v - log(2r)
    scale_hi = area * c * (2.0 * r) ** m
    v_hi = max(2.0, math.log(scale_hi / (rate * tol)) / rate)
    # near the top only sup |f| matters and the weight is exp((n-1) v)
    c0 = decay_certificate(f, 0.0) or 1.0
    v_lo = min(-2.0, math.log(tol * (n - 1) / (area * c0)) / (n - 1))
    tail = scale_hi * math.exp(-rate * v_hi) / rate + area * c0 * math.exp((n - 1) * v_lo) / (n - 1)
    return v_lo, v_hi, tail


def _sphere_samples(f: DecayFunction, contact, r: float, v: np.ndarray, sphere_nodes: int):
    pts, wts = sphere_rule(f.n - 2, sphere_nodes)
    sech = 1.0 / np.cosh(v)
    height = r * 2.0 / (1.0 + np.exp(2.0 * v))
    xp = np.asarray(contact, float) + r * sech[:, None, None] * pts[None, :, :]
    xn = np.broadcast_to(height[:, None], xp.shape[:-1])
    vals = f(xp, xn) @ wts
    return vals * np.exp((f.n - 1) * v)


def transform_sphere(f: DecayFunction, contact: Sequence[float], r: float,
                     q: QuadratureSpec = QuadratureSpec()) -> Estimate:
    """Transform of ``f`` over the sphere horocycle tangent at ``contact`` with radius ``r``."""
    n = f.n
    contact = np.atleast_1d(np.asarray(contact, dtype=float))
    if contact.shape != (n - 1,):
        raise ValueError(f"contact must have length {n - 1}")
    if not r > 0:
        raise ValueError(f"radius must be positive, got {r}")
    if f.decay_order < n:
        raise NonIntegrableError(
            f"{f.name}: decay order {f.decay_order} < n={n}; the slice integrand is not "
            "guaranteed to vanish at the contact point")
    v_lo, v_hi, tail = _sphere_v_range(f, r, q.tail_tol)
    N = q.theta_nodes | 1  # odd, so the every-other-node subrule shares both endpoints
    v = np.linspace(v_lo, v_hi, N)
    h = v[1] - v[0]
    g = _sphere_samples(f, contact, r, v, q.sphere_nodes)
    peak = float(np.max(np.abs(g))) if g.size else 0.0
    m, c = _truncation_constant(f)
    edge_bound = sphere_area(n - 2) * c * (2.0 * r) ** m * math.exp(-(2.0 * m - n + 1.0) * v_hi)
    if abs(g[-1]) > 1e3 * edge_bound + 1e-12 * peak:
        raise NonIntegrableError(
            f"{f.name}: integrand {abs(g[-1]):.3e} at the contact-point cutoff exceeds the "
            f"decay bound {edge_bound:.3e}; declared decay order looks too optimistic")
    value = h * (np.sum(g) - 0.5 * (g[0] + g[-1]))
    coarse = 2 * h * (np.sum(g[::2]) - 0.5 * (g[0] + g[-1]))
    err = abs(value - coarse)
    if n >= 3 and q.sphere_nodes >= 4:
        g2 = _sphere_samples(f, contact, r, v, q.sphere_nodes // 2)
        err += abs(value - h * (np.sum(g2) - 0.5 * (g2[0] + g2[-1])))
    return Estimate(float(value), float(err + tail), tail)


# -- plane horocycles -------------------------------------------------------


def plane_rule(n: int, cutoff: float, radial_nodes: int, sphere_nodes: int):
    """Polar rule on the ball ``|x'| <= cutoff`` in ``R^{n-1}`` using ``rho = sinh t``."""
    y, w = gauss_legendre(radial_nodes)
    T = math.asinh(cutoff)
    t = 0.5 * T * (y + 1.0)
    rho = np.sinh(t)
    rw = 0.5 * T * w * np.cosh(t) * rho ** (n - 2)
    pts, sw = sphere_rule(n - 2, sphere_nodes)
    xp = rho[:, None, None] * pts[None, :, :]
    wts = rw[:, None] * sw[None, :]
    return xp.reshape(-1, n - 1), wts.ravel()


def horizontal_tail(f: DecayFunction, height: float, cutoff: float) -> float:
    """Bound on ``int_{|x'| > cutoff} |f(x', height)| dx'`` from the decay certificate."""
    n = f.n
    m, c = _truncation_constant(f)
    rate = 2.0 * m - n + 1.0
    # cosh d(0, (x', h)) >= |x'|^2 / (2h)
    return sphere_area(n - 2) * c * (2.0 * height) ** m * cutoff ** (-rate) / rate


def horizontal_cutoff(f: DecayFunction, height: float, tol: float) -> float:
    n = f.n
    m, c = _truncation_constant(f)
    rate = 2.0 * m - n + 1.0
    scale = sphere_area(n - 2) * c * (2.0 * height) ** m / rate
    return max(4.0, (scale / tol) ** (1.0 / rate))


def transform_plane(f: DecayFunction, c: float, q: QuadratureSpec = QuadratureSpec()) -> Estimate:
    """``int f(x', c) c^{-(n-1)} dx'`` truncated to ``|x'| <= R``."""
    if not c > 0:
        raise ValueError(f"plane height must be positive, got {c}")
    n = f.n
    R = q.plane_cutoff or horizontal_cutoff(f, c, q.tail_tol * c ** (n - 1))
    tail = horizontal_tail(f, c, R) / c ** (n - 1)
    if tail > q.tail_tol * (1.0 + 1e-9):
        warnings.warn(f"{f.name}: plane tail bound {tail:.2e} above tolerance {q.tail_tol:.1e}",
                      TruncationWarning, stacklevel=2)
    xp, w = plane_rule(n, R, q.plane_nodes, q.sphere_nodes)
    vals = f(xp, np.full(len(w), c))
    value = float(vals @ w) / c ** (n - 1)
    xp2, w2 = plane_rule(n, R, max(2, q.plane_nodes // 2), q.sphere_nodes)
    coarse = float(f(xp2, np.full(len(w2), c)) @ w2) / c ** (n - 1)
    err = abs(value - coarse)
    if n >= 3 and q.sphere_nodes >= 4:
        xp3, w3 = plane_rule(n, R, q.plane_nodes, q.sphere_nodes // 2)
        err += abs(value - float(f(xp3, np.full(len(w3), c)) @ w3) / c ** (n - 1))
    return Estimate(value, err + tail, tail)


def transform_via_isometry(f: DecayFunction, contact: Sequence[float], r: float,
                           q: QuadratureSpec = QuadratureSpec()) -> Estimate:
    """Sphere transform computed as a plane transform of ``f o sigma^{-1}``.

    ``sigma`` translates the contact point to 0 and inverts, taking the
    sphere onto the plane ``x_n = 1/(2r)``.
    """
    n = f.n
    contact = np.atleast_1d(np.asarray(contact, dtype=float))
    if contact.shape != (n - 1,):
        raise ValueError(f"contact must have length {n - 1}")
    sigma = sphere_to_plane_isometry(r, contact)
    pulled = f.compose(sigma.inverse(), name=f"{f.name}∘σ⁻¹")
    return transform_plane(pulled, 1.0 / (2.0 * r), q)


def translate(f: DecayFunction, t: Sequence[float]) -> DecayFunction:
    """``f o tau_t`` where ``tau_t`` is the horizontal translation by ``t``."""
    return f.compose(HorizontalTranslation(tuple(t)), name=f"{f.name}∘τ")


__all__ = [
    "DecayFunction",
    "Estimate",
    "QuadratureSpec",
    "decay_certificate",
    "horizontal_cutoff",
    "horizontal_tail",
    "plane_rule",
    "transform_plane",
    "transform_sphere",
    "transform_via_isometry",
    "translate",
    "zero_function",
]
