"""Discrete probability measures, open cones and the samplers used as
stand-ins for diffuse versus curve-supported starting measures.

A finite set can never be purely (n-1)-unrectifiable.  The operational proxy
used throughout is the cone-occupancy statistic: at a point of a diffuse
cloud every small cone holds further points, while on a curve some
direction sees nothing.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import GeometryError, MeasureError
from .rng import SplitMix64
from .spaces import Euclidean, GeodesicSpace, Sphere

WEIGHT_TOL = 1e-12
DISTINCT_TOL = 1e-12


@dataclass
class DiscreteMeasure:
    points: np.ndarray
    weights: np.ndarray
    space: GeodesicSpace | None = None

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=float)
        if pts.ndim == 1:
            pts = pts.reshape(-1, 1)
        w = np.asarray(self.weights, dtype=float).reshape(-1)
        if len(pts) == 0:
            raise MeasureError("measure has no atoms", code="empty")
        if len(w) != len(pts):
            raise MeasureError(
                f"{len(pts)} points but {len(w)} weights", code="dimension_mismatch"
            )
        if self.space is None:
            self.space = Euclidean(pts.shape[1])
        if pts.shape[1] != self.space.coord_dim:
            raise MeasureError(
                f"points have {pts.shape[1]} coordinates, {self.space.name} expects "
                f"{self.space.coord_dim}",
                code="dimension_mismatch",
            )
        if not (np.all(np.isfinite(pts)) and np.all(np.isfinite(w))):
            raise MeasureError("non-finite coordinate or weight", code="non_finite")
        if np.any(w <= 0):
            raise MeasureError("weights must be positive", code="nonpositive_weight")
        if abs(w.sum() - 1.0) > WEIGHT_TOL:
            raise MeasureError(
                f"weights not normalized (sum = {w.sum()!r})", code="weights_not_normalized"
            )
        pts = np.array([self.space.point(p) for p in pts])
        if len(pts) > 1:
            D = self.space.distance_matrix(pts, pts)
            np.fill_diagonal(D, np.inf)
            if D.min() <= DISTINCT_TOL:
                i, j = np.unravel_index(np.argmin(D), D.shape)
                raise MeasureError(f"duplicate points {i} and {j}", code="duplicate_points")
        self.points = pts
        self.weights = w

    @classmethod
    def uniform(cls, points, space=None) -> "DiscreteMeasure":
        pts = np.asarray(points, dtype=float)
        n = len(pts)
        return cls(pts, np.full(n, 1.0 / n), space)

    def __len__(self):
        return len(self.weights)

    @property
    def is_uniform(self) -> bool:
        return bool(np.all(self.weights == self.weights[0]))


@dataclass(frozen=True)
class Cone:
    """Open cone at ``apex`` around unit ``direction`` with half-opening
    ``opening``, cut to the open ball of radius ``radius``."""

    apex: np.ndarray
    direction: np.ndarray
    opening: float
    radius: float = math.inf

    def __post_init__(self):
        apex = np.asarray(self.apex, dtype=float).reshape(-1)
        theta = np.asarray(self.direction, dtype=float).reshape(-1)
        if apex.shape != theta.shape:
            raise GeometryError("apex and direction dimensions differ")
        if abs(np.linalg.norm(theta) - 1.0) > 1e-12:
            raise GeometryError("cone direction must be a unit vector")
        if not (0.0 < self.opening < math.pi):
            raise GeometryError("cone opening must lie in (0, pi)")
        if not self.radius > 0:
            raise GeometryError("cone radius must be positive")
        object.__setattr__(self, "apex", apex)
        object.__setattr__(self, "direction", theta)


def cone_contains(cone: Cone, y) -> bool:
    v = np.asarray(y, dtype=float).reshape(-1) - cone.apex
    r = float(np.linalg.norm(v))
    if r == 0.0:
        raise GeometryError("apex excluded")
    return bool(np.dot(v, cone.direction) > math.cos(cone.opening) * r and r < cone.radius)


def cone_occupancy(E, x, direction, opening: float, radius: float) -> int:
    """Number of points of ``E`` other than ``x`` inside C(x, direction, opening) and B(x, radius)."""
    E = np.atleast_2d(np.asarray(E, dtype=float))
    cone = Cone(np.asarray(x, dtype=float), np.asarray(direction, dtype=float), opening, radius)
    V = E - cone.apex
    r = np.linalg.norm(V, axis=1)
    inside = (V @ cone.direction > math.cos(opening) * r) & (r < radius) & (r > 0)
    return int(inside.sum())


def unit_directions(count: int) -> np.ndarray:
    """``count`` evenly spread unit vectors in the plane."""
    ang = 2 * math.pi * np.arange(count) / count
    return np.column_stack([np.cos(ang), np.sin(ang)])


def full_occupancy_count(E, directions, opening: float, radius: float) -> int:
    """How many points of ``E`` see at least one other point in every given cone."""
    E = np.atleast_2d(np.asarray(E, dtype=float))
    return sum(
        all(cone_occupancy(E, x, th, opening, radius) > 0 for th in directions) for x in E
    )


@dataclass(frozen=True)
class Box:
    lo: tuple
    hi: tuple

    def volume(self):
        return float(np.prod(np.asarray(self.hi, float) - np.asarray(self.lo, float)))

    def draw(self, rng: SplitMix64) -> np.ndarray:
        return np.array([rng.uniform(a, b) for a, b in zip(self.lo, self.hi)])


@dataclass(frozen=True)
class SphereCap:
    """Geodesic cap on the round 2-sphere around ``center`` (angular radius in radians)."""

    center: tuple
    angular_radius: float
    radius: float = 1.0

    def volume(self):
        return 2 * math.pi * (1 - math.cos(min(self.angular_radius, math.pi))) * self.radius**2

    def draw(self, rng: SplitMix64) -> np.ndarray:
        c = np.asarray(self.center, dtype=float)
        c = c / np.linalg.norm(c)
        z = 1.0 - rng.random() * (1.0 - math.cos(min(self.angular_radius, math.pi)))
        az = 2 * math.pi * rng.random()
        s = math.sqrt(max(0.0, 1.0 - z * z))
        # orthonormal frame (e1, e2, c)
        ref = np.zeros(3)
        ref[int(np.argmin(np.abs(c)))] = 1.0
        e1 = ref - np.dot(ref, c) * c
        e1 /= np.linalg.norm(e1)
        e2 = np.cross(c, e1)
        p = s * math.cos(az) * e1 + s * math.sin(az) * e2 + z * c
        return self.radius * p / np.linalg.norm(p)


def _default_space(region):
    if isinstance(region, SphereCap):
        return Sphere(2, region.radius)
    return Euclidean(len(region.lo))


def _collect(draw, n, space, max_redraws=1000):
    pts = []
    for _ in range(n):
        for _attempt in range(max_redraws):
            p = space.point(draw())
            if not pts or min(space.distance(p, q) for q in pts) > DISTINCT_TOL:
                break
        else:
            raise MeasureError("could not draw distinct points", code="duplicate_points")
        pts.append(p)
    return np.array(pts)


def sample_diffuse(region, n: int, seed: int, space: GeodesicSpace | None = None) -> DiscreteMeasure:
    """``n`` pseudorandom points in ``region`` with uniform weights.

    ``region`` is a :class:`Box` (coordinates in Euclidean space, or (rho, phi)
    on a cone) or a :class:`SphereCap`.  Coincident draws are redrawn.
    """
    if n < 1:
        raise MeasureError("need at least one point", code="empty")
    if not region.volume() > 0:
        raise MeasureError("empty sampling region", code="empty_region")
    space = space or _default_space(region)
    rng = SplitMix64(seed)
    return DiscreteMeasure.uniform(_collect(lambda: region.draw(rng), n, space), space)


@dataclass(frozen=True)
class Segment:
    start: tuple
    end: tuple

    def __call__(self, u: float) -> np.ndarray:
        a, b = np.asarray(self.start, float), np.asarray(self.end, float)
        return (1 - u) * a + u * b


@dataclass(frozen=True)
class Circle:
    center: tuple = (0.0, 0.0)
    radius: float = 1.0

    def __call__(self, u: float) -> np.ndarray:
        a = 2 * math.pi * u
        return np.asarray(self.center, float) + self.radius * np.array([math.cos(a), math.sin(a)])


def sample_on_curve(curve: Callable[[float], np.ndarray], n: int, seed: int,
                    space: GeodesicSpace | None = None) -> DiscreteMeasure:
    """``n`` points ``curve(u)`` at pseudorandom parameters u in [0, 1], uniform weights."""
    if n < 1:
        raise MeasureError("need at least one point", code="empty")
    rng = SplitMix64(seed)
    first = np.asarray(curve(0.0), dtype=float)
    space = space or Euclidean(first.shape[0])
    return DiscreteMeasure.uniform(_collect(lambda: curve(rng.random()), n, space), space)

