"""Distance-coordinate charts x -> (d(a_1, x), ..., d(a_n, x)).

Strainer quality is not verified; distortion is measured after the fact on
sample pairs instead.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ChartError
from .spaces import DEFAULT_SCHEDULE, GeodesicSpace, Geodesic, richardson_limit


@dataclass(frozen=True)
class Chart:
    space: GeodesicSpace
    base: np.ndarray
    strainers: tuple
    radius: float
    opposite: tuple = ()  # optional partner points b_i, recorded but unused

    def __post_init__(self):
        base = self.space.point(self.base)
        strainers = tuple(self.space.point(a) for a in self.strainers)
        if len(strainers) != self.space.dimension:
            raise ChartError(
                f"need {self.space.dimension} strainer points, got {len(strainers)}"
            )
        if not self.radius > 0:
            raise ChartError("domain radius must be positive")
        for a in strainers:
            if self.space.distance(a, base) <= 1e-12:
                raise ChartError("strainer point coincides with the base point")
        for a, b in itertools.combinations(strainers, 2):
            if self.space.distance(a, b) <= 1e-12:
                raise ChartError("strainer points must be distinct")
        object.__setattr__(self, "base", base)
        object.__setattr__(self, "strainers", strainers)
        object.__setattr__(self, "opposite", tuple(self.space.point(b) for b in self.opposite))

    def contains(self, x) -> bool:
        return self.space.distance(self.base, x) <= self.radius

    def __call__(self, x) -> np.ndarray:
        return chart_eval(self, x)

    def to_spec(self) -> dict:
        return {
            "base": self.base.tolist(),
            "strainers": [a.tolist() for a in self.strainers],
            "radius": self.radius,
        }


def chart_eval(chart: Chart, x) -> np.ndarray:
    if not chart.contains(x):
        raise ChartError("point outside the chart domain")
    return np.array([chart.space.distance(a, x) for a in chart.strainers])


@dataclass
class Distortion:
    max_ratio: float
    min_ratio: float
    skipped: int = 0
    pairs: int = 0

    def is_bilipschitz(self, eps: float) -> bool:
        return self.max_ratio <= 1 + eps and self.min_ratio >= 1 / (1 + eps)


def distortion(chart: Chart, pairs) -> Distortion:
    """Extremes of |phi(x) - phi(y)| / d(x, y); coincident pairs are skipped."""
    hi, lo, skipped, used = -math.inf, math.inf, 0, 0
    for x, y in pairs:
        d = chart.space.distance(x, y)
        if d <= 1e-15:
            skipped += 1
            continue
        ratio = float(np.linalg.norm(chart_eval(chart, x) - chart_eval(chart, y))) / d
        hi, lo = max(hi, ratio), min(lo, ratio)
        used += 1
    if used == 0:
        raise ChartError("no non-degenerate sample pair")
    return Distortion(hi, lo, skipped, used)


def all_pairs(points):
    return itertools.combinations(list(points), 2)


@dataclass
class DirectionEstimate:
    quotients: list = field(default_factory=list)
    params: list = field(default_factory=list)
    limit: np.ndarray = None


def geodesic_direction(chart: Chart, gamma, schedule=None) -> DirectionEstimate:
    """Chart derivative of a geodesic at its start, per unit arclength.

    With ``schedule=None`` the default fractions of the domain radius are used
    as arclengths along ``gamma`` (which then must be a :class:`Geodesic`);
    an explicit schedule is read as curve parameters.
    """
    if schedule is None:
        if not isinstance(gamma, Geodesic):
            raise ChartError("default schedule needs a Geodesic with known length")
        length = gamma.length
        if length <= 0:
            raise ChartError("constant curve has no direction")
        ts = [f * chart.radius / length for f in DEFAULT_SCHEDULE]
        if ts[0] > 1.0:
            ts = [t / ts[0] for t in ts]
    else:
        ts = [float(t) for t in schedule]
        if len(ts) < 4 or any(b >= a for a, b in zip(ts, ts[1:])) or ts[-1] <= 0:
            raise ChartError("schedule must be strictly decreasing, positive, >= 4 entries")
    x0 = gamma(0.0)
    if not chart.contains(x0):
        raise ChartError("curve starts outside the chart domain")
    phi0 = chart_eval(chart, x0)
    quotients = []
    for t in ts:
        xt = gamma(t)
        if not chart.contains(xt):
            raise ChartError("curve leaves the chart domain within the schedule")
        quotients.append((chart_eval(chart, xt) - phi0) / chart.space.distance(xt, x0))
    return DirectionEstimate(quotients, ts, np.asarray(richardson_limit(ts, np.array(quotients))))
