"""Upper half-space model of hyperbolic space.

Points are ``(x', x_n)`` with ``x' in R^{n-1}`` and ``x_n > 0`` under the
metric ``ds^2 = |dx|^2 / x_n^2``.  Besides the scalar API on :class:`PointH`,
most helpers accept stacked numpy arrays ``x_prime`` of shape ``(..., n-1)``
and ``x_n`` of shape ``(...)`` so the quadrature code can stay vectorized.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence, Union

import numpy as np

MIN_DIM = 2
MAX_DIM = 8


def _as_vector(values) -> tuple[float, ...]:
    arr = np.atleast_1d(np.asarray(values, dtype=float))
    if arr.ndim != 1:
        raise ValueError(f"expected a flat coordinate vector, got shape {arr.shape}")
    return tuple(float(v) for v in arr)


@dataclass(frozen=True)
class PointH:
    """A point of H^n in half-space coordinates."""

    x_prime: tuple[float, ...]
    x_n: float

    def __post_init__(self) -> None:
        object.__setattr__(self, "x_prime", _as_vector(self.x_prime))
        object.__setattr__(self, "x_n", float(self.x_n))
        if not self.x_n > 0.0:
            raise ValueError(f"height must be strictly positive, got x_n={self.x_n}")
        if not MIN_DIM <= self.dim <= MAX_DIM:
            raise ValueError(f"dimension {self.dim} outside [{MIN_DIM}, {MAX_DIM}]")
        if not all(np.isfinite(self.x_prime)) or not np.isfinite(self.x_n):
            raise ValueError("coordinates must be finite")

    @classmethod
    def from_coords(cls, coords: Sequence[float]) -> PointH:
        coords = _as_vector(coords)
        return cls(coords[:-1], coords[-1])

    @classmethod
    def origin(cls, n: int) -> PointH:
        """The base point ``(0, ..., 0, 1)``."""
        return cls((0.0,) * (n - 1), 1.0)

    @property
    def dim(self) -> int:
        return len(self.x_prime) + 1

    @property
    def coords(self) -> np.ndarray:
        return np.array(self.x_prime + (self.x_n,))


def cosh_distance(xp, xn, yp, yn) -> np.ndarray:
    """``cosh d`` between stacked points, broadcasting over leading axes."""
    xp, yp = np.asarray(xp, float), np.asarray(yp, float)
    xn, yn = np.asarray(xn, float), np.asarray(yn, float)
    horiz = np.sum((xp - yp) ** 2, axis=-1)
    return 1.0 + (horiz + (xn - yn) ** 2) / (2.0 * xn * yn)


def distance_arrays(xp, xn, yp, yn) -> np.ndarray:
    """Vectorized hyperbolic distance.

    Uses ``d = 2 asinh(chord / (2 sqrt(x_n y_n)))`` which is the arccosh
    closed form rewritten to stay accurate for nearby points.
    """
    xp, yp = np.asarray(xp, float), np.asarray(yp, float)
    xn, yn = np.asarray(xn, float), np.asarray(yn, float)
    chord2 = np.sum((xp - yp) ** 2, axis=-1) + (xn - yn) ** 2
    return 2.0 * np.arcsinh(np.sqrt(chord2) / (2.0 * np.sqrt(xn * yn)))


def distance_from_origin(xp, xn) -> np.ndarray:
    xp = np.asarray(xp, float)
    return distance_arrays(xp, xn, np.zeros(xp.shape[-1]), 1.0)


def distance(p: PointH, q: PointH) -> float:
    """Hyperbolic distance between two points of the same dimension."""
    if p.dim != q.dim:
        raise ValueError(f"dimension mismatch: {p.dim} vs {q.dim}")
    return float(distance_arrays(p.x_prime, p.x_n, q.x_prime, q.x_n))


# -- isometries -------------------------------------------------------------


@dataclass(frozen=True)
class HorizontalTranslation:
    t: tuple[float, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "t", _as_vector(self.t))

    def __call__(self, xp, xn):
        xp = np.asarray(xp, float)
        if xp.shape[-1] != len(self.t):
            raise ValueError("translation vector has the wrong dimension")
        return xp + np.asarray(self.t), np.asarray(xn, float)


@dataclass(frozen=True)
class Dilation:
    lam: float

    def __post_init__(self) -> None:
        if not self.lam > 0.0:
            raise ValueError(f"dilation factor must be positive, got {self.lam}")

    def __call__(self, xp, xn):
        return self.lam * np.asarray(xp, float), self.lam * np.asarray(xn, float)


@dataclass(frozen=True)
class Inversion:
    """Inversion ``x -> x / |x|^2`` in the unit sphere centred on the boundary origin.

    It maps the half-space onto itself, so no extra reflection is needed.
    It is an involution.
    """

    def __call__(self, xp, xn):
        xp, xn = np.asarray(xp, float), np.asarray(xn, float)
        norm2 = np.sum(xp**2, axis=-1) + xn**2
        return xp / norm2[..., None], xn / norm2


@dataclass(frozen=True)
class Composition:
    """Apply ``maps`` left to right."""

    maps: tuple = field(default_factory=tuple)

    def __call__(self, xp, xn):
        for m in self.maps:
            xp, xn = m(xp, xn)
        return xp, xn

    def inverse(self) -> Composition:
        return Composition(tuple(_inverse(m) for m in reversed(self.maps)))


Isometry = Union[HorizontalTranslation, Dilation, Inversion, Composition]


def _inverse(iso: Isometry) -> Isometry:
    if isinstance(iso, HorizontalTranslation):
        return HorizontalTranslation(tuple(-v for v in iso.t))
    if isinstance(iso, Dilation):
        return Dilation(1.0 / iso.lam)
    if isinstance(iso, Inversion):
        return iso
    if isinstance(iso, Composition):
        return iso.inverse()
    raise TypeError(f"not an isometry: {iso!r}")


def inverse(iso: Isometry) -> Isometry:
    return _inverse(iso)


def apply_isometry(iso: Isometry, p: PointH) -> PointH:
    xp, xn = iso(np.asarray(p.x_prime), p.x_n)
    return PointH(tuple(np.atleast_1d(xp)), float(xn))


def sphere_to_plane_isometry(r: float, contact: Sequence[float] | None = None) -> Composition:
    """Isometry taking the sphere horocycle at ``contact`` of radius ``r`` to ``x_n = 1/(2r)``.

    After translating the contact point to the origin the sphere is
    ``|x|^2 = 2 r x_n``, which the unit inversion sends to the plane
    ``x_n = 1/(2r)``.
    """
    if not r > 0.0:
        raise ValueError(f"radius must be positive, got {r}")
    maps: list = []
    if contact is not None:
        maps.append(HorizontalTranslation(tuple(-v for v in _as_vector(contact))))
    maps.append(Inversion())
    return Composition(tuple(maps))


# -- horocycles -------------------------------------------------------------


@dataclass(frozen=True)
class Plane:
    """Horocycle ``x_n = c`` (based at the ideal point at infinity)."""

    c: float

    def __post_init__(self) -> None:
        if not self.c > 0.0:
            raise ValueError(f"plane height must be positive, got {self.c}")


@dataclass(frozen=True)
class Sphere:
    """Euclidean sphere of radius ``r`` tangent to the boundary at ``contact``.

    Its Euclidean centre is ``(contact, r)``.
    """

    contact: tuple[float, ...]
    r: float

    def __post_init__(self) -> None:
        object.__setattr__(self, "contact", _as_vector(self.contact))
        if not self.r > 0.0:
            raise ValueError(f"sphere radius must be positive, got {self.r}")

    @property
    def dim(self) -> int:
        return len(self.contact) + 1

    def contains(self, p: PointH, atol: float = 1e-12) -> bool:
        centre = np.array(self.contact + (self.r,))
        return abs(np.linalg.norm(p.coords - centre) - self.r) <= atol * max(1.0, self.r)


Horocycle = Union[Plane, Sphere]


def lies_outside(xi: Horocycle, xi0: Horocycle = Plane(1.0)) -> bool:
    """Whether ``xi`` misses the open horoball ``{x_n > 1}`` bounded by ``xi0``.

    ``xi0`` must already be normalized to the plane of height 1.  Tangency
    counts as outside, and so do planes of height ``c <= 1``.
    """
    if not (isinstance(xi0, Plane) and xi0.c == 1.0):
        raise ValueError("reference horocycle must be normalized to Plane(1.0)")
    if isinstance(xi, Sphere):
        return 2.0 * xi.r <= 1.0
    if isinstance(xi, Plane):
        return xi.c <= 1.0
    raise TypeError(f"not a horocycle: {xi!r}")
