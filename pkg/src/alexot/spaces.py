"""Geodesic spaces: Euclidean space, round spheres and flat metric cones.

A space exposes a distance and a two-endpoint geodesic oracle
``geodesic_point(p, q, t)`` with ``t`` in [0, 1].  Where geodesics are not
unique (antipodes, pairs seen across a cone apex) a fixed canonical one is
returned so restricted supports are reproducible.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy.spatial.distance import cdist

from . import model
from .errors import ConfigError, GeometryError

DEFAULT_SCHEDULE = (0.1, 0.05, 0.025, 0.0125)


class GeodesicSpace:
    """Base class.  Points are 1-D float arrays in the space's coordinates."""

    name = "abstract"
    dimension: int = 1
    curvature_lower_bound: float | None = None
    coord_dim: int = 1

    def point(self, p) -> np.ndarray:
        p = np.asarray(p, dtype=float).reshape(-1)
        if p.shape != (self.coord_dim,):
            raise GeometryError(
                f"{self.name} points have {self.coord_dim} coordinates, got {p.shape[0]}"
            )
        return p

    def distance(self, p, q) -> float:
        raise NotImplementedError

    def geodesic_point(self, p, q, t: float) -> np.ndarray:
        raise NotImplementedError

    def distance_matrix(self, P, Q) -> np.ndarray:
        P = np.asarray(P, dtype=float)
        Q = np.asarray(Q, dtype=float)
        out = np.empty((len(P), len(Q)))
        for i, p in enumerate(P):
            for j, q in enumerate(Q):
                out[i, j] = self.distance(p, q)
        return out

    def to_spec(self) -> dict:
        raise NotImplementedError

    def __repr__(self):
        args = ", ".join(f"{k}={v!r}" for k, v in self.to_spec().items() if k != "type")
        return f"{type(self).__name__}({args})"


class Euclidean(GeodesicSpace):
    name = "euclidean"
    curvature_lower_bound = 0.0

    def __init__(self, dimension: int = 2):
        if dimension < 1:
            raise GeometryError("dimension must be >= 1")
        self.dimension = self.coord_dim = int(dimension)

    def distance(self, p, q) -> float:
        return float(np.linalg.norm(self.point(p) - self.point(q)))

    def geodesic_point(self, p, q, t):
        _check_t(t)
        p, q = self.point(p), self.point(q)
        return (1.0 - t) * p + t * q

    def distance_matrix(self, P, Q):
        return cdist(np.atleast_2d(P), np.atleast_2d(Q))

    def to_spec(self):
        return {"type": self.name, "dimension": self.dimension}


class Sphere(GeodesicSpace):
    """Round sphere of the given radius, embedded in R^(dimension+1)."""

    name = "sphere"

    def __init__(self, dimension: int = 2, radius: float = 1.0):
        if dimension < 1:
            raise GeometryError("dimension must be >= 1")
        if not radius > 0:
            raise GeometryError("radius must be positive")
        self.dimension = int(dimension)
        self.coord_dim = self.dimension + 1
        self.radius = float(radius)
        self.curvature_lower_bound = 1.0 / self.radius**2

    def point(self, p):
        p = super().point(p)
        if abs(np.linalg.norm(p) - self.radius) > 1e-9 * self.radius:
            raise GeometryError(f"point is not on the sphere of radius {self.radius!r}")
        return p

    def _unit(self, p):
        p = self.point(p)
        return p / np.linalg.norm(p)

    def project(self, p) -> np.ndarray:
        """Radial projection of an ambient point onto the sphere."""
        p = super().point(p)
        n = np.linalg.norm(p)
        if not n > 0:
            raise GeometryError("cannot project the origin")
        return self.radius * p / n

    def distance(self, p, q):
        u, v = self._unit(p), self._unit(q)
        return self.radius * 2.0 * math.atan2(np.linalg.norm(u - v), np.linalg.norm(u + v))

    def _tangent_towards(self, u, v):
        w = v - np.dot(u, v) * u
        nw = np.linalg.norm(w)
        if nw > 1e-12:
            return w / nw
        # antipodal (or equal) pair: fixed reference axis, lowest index wins ties
        axis = np.zeros_like(u)
        axis[int(np.argmin(np.abs(u)))] = 1.0
        w = axis - np.dot(u, axis) * u
        return w / np.linalg.norm(w)

    def geodesic_point(self, p, q, t):
        _check_t(t)
        u, v = self._unit(p), self._unit(q)
        omega = 2.0 * math.atan2(np.linalg.norm(u - v), np.linalg.norm(u + v))
        if omega == 0.0:
            return self.radius * u
        w = self._tangent_towards(u, v)
        x = math.cos(t * omega) * u + math.sin(t * omega) * w
        return self.radius * x / np.linalg.norm(x)

    def distance_matrix(self, P, Q):
        P = np.atleast_2d(np.asarray(P, dtype=float))
        Q = np.atleast_2d(np.asarray(Q, dtype=float))
        U = P / np.linalg.norm(P, axis=1, keepdims=True)
        V = Q / np.linalg.norm(Q, axis=1, keepdims=True)
        diff = np.linalg.norm(U[:, None, :] - V[None, :, :], axis=2)
        summ = np.linalg.norm(U[:, None, :] + V[None, :, :], axis=2)
        return self.radius * 2.0 * np.arctan2(diff, summ)

    def to_spec(self):
        return {"type": self.name, "dimension": self.dimension, "radius": self.radius}


class MetricCone(GeodesicSpace):
    """Flat cone of total angle theta over a circle; points are (rho, phi).

    For total angle below 2*pi this is a nonnegatively curved Alexandrov
    surface with a single singular point (the apex).  Above 2*pi there is no
    lower curvature bound at the apex.
    """

    name = "cone"
    dimension = 2
    coord_dim = 2

    def __init__(self, total_angle: float):
        if not (total_angle > 0 and math.isfinite(total_angle)):
            raise GeometryError("total angle must be a positive finite number")
        self.total_angle = float(total_angle)
        self.curvature_lower_bound = 0.0 if self.total_angle <= 2 * math.pi else None

    def point(self, p):
        p = super().point(p)
        rho, phi = float(p[0]), float(p[1])
        if rho < 0:
            raise GeometryError("cone radius coordinate must be >= 0")
        if rho == 0.0:
            return np.array([0.0, 0.0])
        return np.array([rho, math.fmod(phi, self.total_angle) % self.total_angle])

    def _signed_gap(self, phi1, phi2):
        """Angular step from phi1 to phi2 the short way round (+ on ties)."""
        fwd = (phi2 - phi1) % self.total_angle
        back = self.total_angle - fwd
        return fwd if fwd <= back else -back

    def distance(self, p, q):
        (r1, f1), (r2, f2) = self.point(p), self.point(q)
        gap = abs(f1 - f2)
        delta = min(gap, self.total_angle - gap)
        if delta < math.pi:
            return math.sqrt(max(r1 * r1 + r2 * r2 - 2.0 * r1 * r2 * math.cos(delta), 0.0))
        return r1 + r2

    def geodesic_point(self, p, q, t):
        _check_t(t)
        (r1, f1), (r2, f2) = self.point(p), self.point(q)
        if r1 == 0.0 or r2 == 0.0:
            gap = 0.0
        else:
            gap = self._signed_gap(f1, f2)
        if abs(gap) >= math.pi:
            # through the apex, proportionally to arclength
            s = t * (r1 + r2)
            if s <= r1:
                return self.point((r1 - s, f1))
            return self.point((s - r1, f2))
        if r1 == 0.0:
            return self.point((t * r2, f2))
        a = np.array([r1, 0.0])
        b = r2 * np.array([math.cos(gap), math.sin(gap)])
        x = (1.0 - t) * a + t * b
        rho = float(np.hypot(x[0], x[1]))
        if rho == 0.0:
            return np.array([0.0, 0.0])
        return self.point((rho, f1 + math.atan2(x[1], x[0])))

    def to_spec(self):
        return {"type": self.name, "total_angle": self.total_angle}


def space_from_spec(spec: dict) -> GeodesicSpace:
    """Build a space from a config record ``{"type": ..., parameters...}``."""
    kind = str(spec.get("type", "euclidean")).lower()
    if kind == "euclidean":
        return Euclidean(int(spec.get("dimension", 2)))
    if kind == "sphere":
        return Sphere(int(spec.get("dimension", 2)), float(spec.get("radius", 1.0)))
    if kind == "cone":
        if "total_angle" not in spec:
            raise ConfigError("cone space needs 'total_angle'")
        return MetricCone(float(spec["total_angle"]))
    raise ConfigError(f"unknown space type {kind!r}")


def _check_t(t):
    if not (0.0 <= t <= 1.0):
        raise GeometryError(f"geodesic parameter {t!r} outside [0, 1]")


@dataclass(frozen=True)
class Geodesic:
    """The canonical geodesic of ``space`` from ``start`` to ``end``."""

    space: GeodesicSpace
    start: np.ndarray
    end: np.ndarray

    def __call__(self, t: float) -> np.ndarray:
        if t == 0:
            return self.space.point(self.start)
        if t == 1:
            return self.space.point(self.end)
        return self.space.geodesic_point(self.start, self.end, t)

    @property
    def length(self) -> float:
        return self.space.distance(self.start, self.end)


@dataclass
class LimitEstimate:
    """Per-step values of a t -> 0 quantity and their extrapolated limit."""

    values: list = field(default_factory=list)
    limit: float = math.nan


def richardson_limit(ts: Sequence[float], values, order: int = 1):
    """Extrapolate ``values(t)`` to t = 0 by a degree-``order`` fit on the last three points."""
    ts = np.asarray(ts, dtype=float)[-3:]
    vals = np.asarray(values, dtype=float)[-3:]
    if vals.ndim == 1:
        return float(np.polyfit(ts, vals, order)[-1])
    return np.polyfit(ts, vals, order)[-1]


def _check_schedule(schedule):
    ts = [float(x) for x in schedule]
    if len(ts) < 4:
        raise GeometryError("schedule needs at least 4 entries")
    if any(b >= a for a, b in zip(ts, ts[1:])) or ts[-1] <= 0 or ts[0] > 1:
        raise GeometryError("schedule must be strictly decreasing within (0, 1]")
    return ts


def alexandrov_check(space: GeodesicSpace, x, y, z, s: float, k: float) -> float:
    """Slack d(w, z) - |w~ - z~| of the comparison inequality.

    ``w`` is the point of [x, y] at distance ``s`` from ``x``.  A nonnegative
    slack means this configuration satisfies curvature >= k.
    """
    d_xy = space.distance(x, y)
    d_xz = space.distance(x, z)
    d_yz = space.distance(y, z)
    if not (0.0 <= s <= d_xy * (1.0 + model.SLACK) + model.SLACK):
        raise GeometryError("s outside [0, d(x, y)]")
    w = space.point(x) if d_xy == 0 else space.geodesic_point(x, y, min(s / d_xy, 1.0))
    return space.distance(w, z) - model.comparison_point_distance(k, (d_xy, d_xz, d_yz), s)


def _shared_base(space, g1, g2):
    p = g1(0.0)
    if space.distance(p, g2(0.0)) > 1e-12:
        raise GeometryError("geodesics do not share a base point")
    return p


def angle_estimate(space: GeodesicSpace, g1: Callable, g2: Callable, schedule=DEFAULT_SCHEDULE,
                   k: float = 0.0) -> LimitEstimate:
    """Comparison angles theta_k(t_i, s_i) between two geodesics from a common point.

    ``schedule`` entries are either scalars (t = s) or ``(t, s)`` pairs.
    """
    pairs = [(float(e[0]), float(e[1])) if np.ndim(e) else (float(e), float(e)) for e in schedule]
    _check_schedule([t for t, _ in pairs])
    _check_schedule([s for _, s in pairs])
    p = _shared_base(space, g1, g2)
    angles = []
    for t, s in pairs:
        a, b = g1(t), g2(s)
        sides = (space.distance(p, a), space.distance(p, b), space.distance(a, b))
        angles.append(model.comparison_angle(k, sides))
    return LimitEstimate(angles, richardson_limit([t for t, _ in pairs], angles))


def separation_rate(space: GeodesicSpace, g1: Callable, g2: Callable,
                    schedule=DEFAULT_SCHEDULE) -> LimitEstimate:
    """Estimate lim d(g1(t), g2(t))/t as t -> 0."""
    ts = _check_schedule(schedule)
    _shared_base(space, g1, g2)
    if space.distance(g1(1.0), g2(1.0)) <= 1e-12:
        raise GeometryError("geodesics not distinct")
    rates = [space.distance(g1(t), g2(t)) / t for t in ts]
    return LimitEstimate(rates, richardson_limit(ts, rates))
