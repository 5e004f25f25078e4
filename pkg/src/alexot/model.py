"""Trigonometry of the constant-curvature model surfaces M_k.

Everything is written in terms of the generalized sine ``sn_k`` so a single
formula covers the sphere (k > 0), the plane (k = 0) and the hyperbolic
plane (k < 0).  Angles are computed with half-angle formulas and sides with
the haversine form of the law of cosines; neither needs ``acos`` so there is
no loss of precision near degenerate triangles.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import GeometryError

# below this value of |k| * length**2 the series branches are used
SERIES_THRESHOLD = 1e-6
# floating-point slack tolerated on triangle inequalities and angle ranges
SLACK = 1e-12


def sn(k: float, x: float) -> float:
    """Generalized sine: sin(sqrt(k) x)/sqrt(k), x, or sinh(sqrt(-k) x)/sqrt(-k)."""
    kx2 = k * x * x
    if abs(kx2) < SERIES_THRESHOLD:
        return x * (1.0 - kx2 / 6.0 + kx2 * kx2 / 120.0)
    if k > 0:
        r = math.sqrt(k)
        return math.sin(r * x) / r
    r = math.sqrt(-k)
    return math.sinh(r * x) / r


def asn(k: float, y: float) -> float:
    """Inverse of :func:`sn` on its principal branch."""
    ky2 = k * y * y
    if abs(ky2) < SERIES_THRESHOLD:
        return y * (1.0 + ky2 / 6.0 + 3.0 * ky2 * ky2 / 40.0)
    if k > 0:
        r = math.sqrt(k)
        return math.asin(min(1.0, r * y)) / r
    r = math.sqrt(-k)
    return math.asinh(r * y) / r


def md(k: float, x: float) -> float:
    """Modified distance (1 - cs_k(x))/k, equal to x**2/2 in the plane."""
    h = sn(k, 0.5 * x)
    return 2.0 * h * h


def md_inverse(k: float, m: float) -> float:
    return 2.0 * asn(k, math.sqrt(max(m, 0.0) / 2.0))


def diameter(k: float) -> float:
    """Diameter of M_k (infinite unless k > 0)."""
    return math.pi / math.sqrt(k) if k > 0 else math.inf


@dataclass(frozen=True)
class TriangleSides:
    d_xy: float
    d_xz: float
    d_yz: float

    @classmethod
    def coerce(cls, sides) -> "TriangleSides":
        if isinstance(sides, cls):
            return sides
        d_xy, d_xz, d_yz = (float(v) for v in sides)
        return cls(d_xy, d_xz, d_yz)

    def check(self, k: float) -> tuple[float, float, float, float]:
        """Validate for M_k and return (s, s - d_xy, s - d_xz, s - d_yz).

        Small negative excesses (rounding) are clamped to zero.
        """
        a, b, c = self.d_xy, self.d_xz, self.d_yz
        if not all(math.isfinite(v) for v in (a, b, c)):
            raise GeometryError("non-finite side length")
        if min(a, b, c) < 0:
            raise GeometryError("negative side length")
        s = 0.5 * (a + b + c)
        tol = SLACK * max(1.0, s)
        excess = []
        for side in (a, b, c):
            e = s - side
            if e < -tol:
                raise GeometryError("sides violate the triangle inequality")
            excess.append(max(e, 0.0))
        if k > 0 and s > diameter(k) * (1.0 + SLACK):
            raise GeometryError("no comparison triangle: perimeter exceeds 2*pi/sqrt(k)")
        return (min(s, diameter(k)), *excess)


def comparison_angle(k: float, sides) -> float:
    """Angle at x of the comparison triangle of (x, y, z) in M_k.

    ``sides`` is ``(d(x,y), d(x,z), d(y,z))``.
    """
    sides = TriangleSides.coerce(sides)
    if sides.d_xy == 0 or sides.d_xz == 0:
        raise GeometryError("angle undefined at degenerate vertex")
    s, e_xy, e_xz, e_yz = sides.check(k)
    num = sn(k, e_xy) * sn(k, e_xz)
    den = sn(k, s) * sn(k, e_yz)
    return 2.0 * math.atan2(math.sqrt(max(num, 0.0)), math.sqrt(max(den, 0.0)))


def side_from_angle(k: float, a: float, b: float, angle: float) -> float:
    """Third side of the M_k triangle with sides ``a``, ``b`` enclosing ``angle``."""
    if a < 0 or b < 0:
        raise GeometryError("negative side length")
    if not (-SLACK <= angle <= math.pi + SLACK):
        raise GeometryError(f"angle {angle!r} outside [0, pi]")
    angle = min(max(angle, 0.0), math.pi)
    if k > 0 and max(a, b) > diameter(k) * (1.0 + SLACK):
        raise GeometryError("side longer than the model diameter")
    half = math.sin(0.5 * angle)
    m = md(k, a - b) + 2.0 * sn(k, a) * sn(k, b) * half * half
    if k > 0:
        m = min(m, 2.0 / k)
    return md_inverse(k, m)


def comparison_point_distance(k: float, sides, s: float) -> float:
    """|w~ - z~| for w~ on [x~, y~] at distance ``s`` from x~."""
    sides = TriangleSides.coerce(sides)
    if not (-SLACK <= s <= sides.d_xy * (1.0 + SLACK) + SLACK):
        raise GeometryError("comparison point lies outside the side [x, y]")
    if s <= 0:
        sides.check(k)
        return sides.d_xz
    if s >= sides.d_xy:
        sides.check(k)
        return sides.d_yz
    if sides.d_xz == 0:
        sides.check(k)
        return s
    return side_from_angle(k, s, sides.d_xz, comparison_angle(k, sides))
