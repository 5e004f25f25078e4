"""c-cyclical monotonicity for c = d^2: certification, violating cycles,
geodesic restriction of supports, the constant delta(C), and the search for
a four-point configuration that breaks monotonicity of a split plan.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize

from . import charts as charts_mod
from .charts import Chart
from .errors import GeometryError, SolverError
from .measures import Cone, cone_contains
from .solver import MASS_TOL, TransportPlan, detect_map
from .spaces import GeodesicSpace, Geodesic

CYCLE_TOL = 1e-9
MAX_K_CLASS = 64


@dataclass
class SupportSet:
    """Finite set of (source, target) pairs in ``space``."""

    sources: np.ndarray
    targets: np.ndarray
    space: GeodesicSpace

    def __post_init__(self):
        self.sources = np.array([self.space.point(p) for p in self.sources])
        self.targets = np.array([self.space.point(p) for p in self.targets])
        if len(self.sources) != len(self.targets):
            raise GeometryError("sources and targets differ in length")

    @classmethod
    def from_plan(cls, plan: TransportPlan, mass_tol: float = MASS_TOL) -> "SupportSet":
        if plan.source is None or plan.target is None:
            raise SolverError("plan has no attached measures")
        cells = plan.support_above(mass_tol)
        src = plan.source.points[[i for i, _ in cells]]
        tgt = plan.target.points[[j for _, j in cells]]
        return cls(src, tgt, plan.source.space)

    def __len__(self):
        return len(self.sources)

    def cost_matrix(self) -> np.ndarray:
        """c[a, b] = d(x_a, y_b)^2."""
        D = self.space.distance_matrix(self.sources, self.targets)
        return D * D


@dataclass
class CyclicalCertificate:
    """No cycle of the exchange graph has weight below -tol."""

    n_pairs: int
    min_cycle_mean: float | None
    certified: bool = True


@dataclass
class CycleViolation:
    """Moving y_{i_l} to x_{i_(l+1)} along the cycle lowers the total cost."""

    indices: list
    original: float
    permuted: float
    deficit: float
    certified: bool = False
    min_cycle_mean: float | None = None


def _exchange_weights(C: np.ndarray) -> np.ndarray:
    """w[l, l'] = c(x_l', y_l) - c(x_l, y_l); no self-loops."""
    W = C.T - np.diag(C)[:, None]
    np.fill_diagonal(W, np.inf)
    return W


def _karp(W):
    """Walk table of Karp's minimum-mean-cycle algorithm from a virtual source."""
    n = len(W)
    D = np.full((n + 1, n), np.inf)
    D[0] = 0.0
    pred = np.zeros((n + 1, n), dtype=int)
    for k in range(1, n + 1):
        cand = D[k - 1][:, None] + W
        pred[k] = np.argmin(cand, axis=0)
        D[k] = cand[pred[k], np.arange(n)]
    with np.errstate(invalid="ignore"):
        ks = np.arange(n)[:, None]
        ratios = (D[n][None, :] - D[:n]) / (n - ks)
        ratios[~np.isfinite(D[:n])] = -np.inf
        worst = ratios.max(axis=0)
    finite = np.isfinite(D[n]) & np.isfinite(worst)
    mean = float(worst[finite].min()) if finite.any() else None
    return D, pred, mean


def _walk_cycles(pred, v, n):
    """Simple cycles contained in the length-n walk ending at ``v``."""
    walk = [v]
    for k in range(n, 0, -1):
        walk.append(int(pred[k][walk[-1]]))
    walk.reverse()
    stack, pos, cycles = [], {}, []
    for node in walk:
        if node in pos:
            start = pos[node]
            cyc = stack[start:]
            cycles.append(cyc)
            for u in cyc[1:]:
                del pos[u]
            del stack[start + 1:]
        else:
            pos[node] = len(stack)
            stack.append(node)
    return cycles


def _canonical(cycle):
    i = cycle.index(min(cycle))
    return tuple(cycle[i:] + cycle[:i])


def check_cyclical(support: SupportSet, cost=None, tol: float = CYCLE_TOL):
    """Certify c-cyclical monotonicity of ``support`` or return a violating cycle.

    Exact for cycles of every length: a violation exists iff the exchange
    graph has a negative cycle.  ``cost`` optionally replaces the squared
    distance matrix (entry [a, b] = c(x_a, y_b)).
    """
    C = support.cost_matrix() if cost is None else np.asarray(cost, dtype=float)
    n = len(C)
    if n == 0:
        raise GeometryError("empty support")
    if n == 1:
        return CyclicalCertificate(1, None)
    W = _exchange_weights(C)
    _, pred, mean = _karp(W)
    best, seen = None, set()
    for v in range(n):
        for cyc in _walk_cycles(pred, v, n):
            key = _canonical(cyc)
            if len(key) < 2 or key in seen:
                continue
            seen.add(key)
            weight = sum(W[a, b] for a, b in zip(key, key[1:] + key[:1]))
            if best is None or weight < best[0]:
                best = (weight, key)
    if best is None or best[0] >= -tol:
        return CyclicalCertificate(n, mean)
    _, key = best
    idx = list(key)
    nxt = idx[1:] + idx[:1]
    original = float(sum(C[i, i] for i in idx))
    permuted = float(sum(C[j, i] for i, j in zip(idx, nxt)))
    return CycleViolation(idx, original, permuted, original - permuted, min_cycle_mean=mean)


def restrict(support: SupportSet, t: float) -> SupportSet:
    """Replace each pair (x, y) by (x, gamma(t)) on the canonical geodesic from x to y."""
    if not (0.0 <= t <= 1.0):
        raise GeometryError(f"t = {t!r} outside [0, 1]")
    space = support.space
    new_targets = [Geodesic(space, x, y)(t) for x, y in zip(support.sources, support.targets)]
    return SupportSet(support.sources.copy(), np.array(new_targets), space)


# ---------------------------------------------------------------------------
# delta(C)


@dataclass
class DeltaProblem:
    C: float
    delta: float
    y1: np.ndarray
    y2: np.ndarray
    max_ratio: float

    def residual(self) -> float:
        """0.5|y1+y2|^2 - (1 - delta)(|y1|^2 + |y2|^2) at the maximizer."""
        s = self.y1 + self.y2
        return 0.5 * float(s @ s) - (1 - self.delta) * float(self.y1 @ self.y1 + self.y2 @ self.y2)


def _ratio_polar(rho, psi):
    # y2 = (1, 0), y1 = y2 + rho (cos psi, sin psi)
    rc = rho * np.cos(psi)
    return (4.0 + 4.0 * rc + rho * rho) / (2.0 + 2.0 * rc + rho * rho)


def delta_of_C(C: float, resolution: int = 1001) -> DeltaProblem:
    """Largest delta with 0.5|y1+y2|^2 <= (1-delta)(|y1|^2+|y2|^2) on
    K = {|y2| = 1, |y2 - y1| in [1/C, C]}.

    By rotation invariance y2 = (1, 0) and y1 ranges over an annulus around
    it, parametrized by (rho, psi) with psi in [0, pi] (reflection symmetry).
    A grid search is polished by a bounded quasi-Newton step.
    """
    if not C > 1:
        raise GeometryError("C must exceed 1")
    if resolution < 1000:
        raise GeometryError("resolution must be at least 1000 points per axis")
    lo, hi = 1.0 / C, float(C)
    rho = np.linspace(lo, hi, resolution)
    psi = np.linspace(0.0, math.pi, resolution)
    F = _ratio_polar(rho[:, None], psi[None, :])
    i, j = np.unravel_index(np.argmax(F), F.shape)
    res = minimize(lambda z: -_ratio_polar(z[0], z[1]), x0=[rho[i], psi[j]],
                   bounds=[(lo, hi), (0.0, math.pi)], method="L-BFGS-B",
                   options={"ftol": 1e-15, "gtol": 1e-12})
    best_rho, best_psi = (res.x if -res.fun >= F[i, j] else (rho[i], psi[j]))
    ratio = float(_ratio_polar(best_rho, best_psi))
    y2 = np.array([1.0, 0.0])
    y1 = y2 + best_rho * np.array([math.cos(best_psi), math.sin(best_psi)])
    return DeltaProblem(float(C), 1.0 - ratio / 2.0, y1, y2, ratio)


# ---------------------------------------------------------------------------
# witness search


@dataclass
class WitnessParams:
    k_class: int
    eps: float
    eps_hat: float
    t: float = 1.0
    delta: float = math.nan

    @classmethod
    def for_class(cls, k: int) -> "WitnessParams":
        d = delta_of_C(2.0 * k).delta
        eps = d / 100.0
        return cls(int(k), eps, eps / (80.0 * k**4), 1.0, d)

    def check(self):
        if self.k_class < 1:
            raise GeometryError("k_class must be >= 1")
        if not math.isclose(self.eps_hat, self.eps / (80.0 * self.k_class**4), rel_tol=1e-12):
            raise GeometryError("eps_hat must equal eps / (80 k^4)")
        if not (0.0 < self.t <= 1.0):
            raise GeometryError("contraction parameter must lie in (0, 1]")

    def to_dict(self) -> dict:
        return {"k_class": self.k_class, "eps": self.eps, "eps_hat": self.eps_hat,
                "t": self.t, "delta": self.delta}


@dataclass
class _Branch:
    row: int
    j1: int
    j2: int
    k: int
    x: np.ndarray
    phi: np.ndarray
    v1: np.ndarray
    v2: np.ndarray


@dataclass
class WitnessResult:
    found: bool
    reason: str = ""
    params: WitnessParams | None = None
    rows: tuple = ()
    targets: tuple = ()
    points: dict = field(default_factory=dict)
    t: float = math.nan
    swapped_sum: float = math.nan
    original_sum: float = math.nan
    deficit: float = math.nan
    opening: float = math.nan
    widenings: int = 0
    cone_radius: float = math.nan

    def restricted_support(self, space: GeodesicSpace) -> SupportSet:
        """The two restricted pairs (x2, g1_x2(t)), (x1, g2_x1(t))."""
        p = self.points
        return SupportSet(np.array([p["x2"], p["x1"]]),
                          np.array([p["g1_x2_t"], p["g2_x1_t"]]), space)


def k_class(space: GeodesicSpace, x, y1, y2, cap: int = MAX_K_CLASS, probes: int = 11):
    """Smallest k with d(x, y2) in [1/k, k] and separation ratios in [1/k, k] for t <= 1/k."""
    d2 = space.distance(x, y2)
    g1, g2 = Geodesic(space, x, y1), Geodesic(space, x, y2)
    for k in range(1, cap + 1):
        if not (1.0 / k <= d2 <= k):
            continue
        ok = True
        for p in range(probes):
            t = (1.0 / k) * 0.5**p
            ratio = space.distance(g1(t), g2(t)) / (t * d2)
            if not (1.0 / k <= ratio <= k):
                ok = False
                break
        if ok:
            return k
    return None


def _branches(plan, chart, mass_tol):
    space = chart.space
    src, tgt = plan.source.points, plan.target.points
    carriers: dict[int, list] = {}
    for i, j, w in zip(plan.rows.tolist(), plan.cols.tolist(), plan.mass.tolist()):
        if w > mass_tol:
            carriers.setdefault(i, []).append(j)
    out = []
    for i in sorted(carriers):
        js = sorted(carriers[i])
        if len(js) < 2 or not chart.contains(src[i]):
            continue
        x = src[i]
        dist = {j: space.distance(x, tgt[j]) for j in js}
        vel = {}
        for j in js:
            try:
                est = charts_mod.geodesic_direction(chart, Geodesic(space, x, tgt[j]))
            except Exception:
                continue
            vel[j] = est.limit * dist[j]
        for j1 in js:
            for j2 in js:
                # first geodesic is the shorter one (ties admit both orders)
                if j1 == j2 or dist[j2] <= 0 or dist[j1] > dist[j2] + 1e-12:
                    continue
                if j1 not in vel or j2 not in vel:
                    continue
                k = k_class(space, x, tgt[j1], tgt[j2])
                if k is None:
                    continue
                out.append(_Branch(i, j1, j2, k, x, charts_mod.chart_eval(chart, x),
                                   vel[j1], vel[j2]))
    return out


def witness_search(plan: TransportPlan, chart: Chart, params: WitnessParams | None = None,
                   cone_radius: float | None = None, mass_tol: float = MASS_TOL,
                   max_opening: float = math.pi / 4) -> WitnessResult:
    """Look for x1, x2 in the split set whose contracted targets violate monotonicity.

    For each split row x1 (first geodesic the shorter one), a second split row
    x2 whose chart velocities match those of x1 and whose chart image lies in
    the cone from phi(x1) towards y2 - y1 is sought.  With
    t = 2|phi(x2) - phi(x1)| / |y2 - y1| the quadruple
    (x2, x1, g2_x1(t), g1_x2(t)) is a witness when

        d^2(x2, g2_x1(t)) + d^2(x1, g1_x2(t)) < d^2(x2, g1_x2(t)) + d^2(x1, g2_x1(t)).

    The cone opening and the velocity-matching radius start at eps_hat and
    double (up to ``max_opening``) while nothing is found.
    """
    if plan.source is None or plan.target is None:
        raise SolverError("plan has no attached measures")
    if params is not None:
        params.check()
    cert = detect_map(plan, mass_tol)
    if cert.is_map:
        return WitnessResult(False, "no split row")
    space = chart.space
    branches = _branches(plan, chart, mass_tol)
    if not branches:
        return WitnessResult(False, "no split row satisfies the class bounds inside the chart")

    param_cache: dict[int, WitnessParams] = {}

    def params_for(k):
        if params is not None:
            return params
        if k not in param_cache:
            param_cache[k] = WitnessParams.for_class(k)
        return param_cache[k]

    max_k = params.k_class if params is not None else MAX_K_CLASS
    base_open = min(params_for(b.k).eps_hat for b in branches if b.k <= max_k) if any(
        b.k <= max_k for b in branches) else None
    if base_open is None:
        return WitnessResult(False, "no split row in the requested class")
    tgt = plan.target.points
    widenings = 0
    level = base_open
    while True:
        opening = min(level, max_opening)
        for b1 in branches:
            if b1.k > max_k:
                continue
            pr = params_for(b1.k)
            diff = b1.v2 - b1.v1
            gap = float(np.linalg.norm(diff))
            if gap == 0.0:
                continue
            t0 = 1.0 / b1.k
            r = cone_radius if cone_radius is not None else 0.5 * t0 * gap
            cone = Cone(b1.phi, diff / gap, opening, r)
            for b2 in branches:
                if b2.row == b1.row or b2.k > b1.k:
                    continue
                if np.linalg.norm(b2.v1 - b1.v1) >= opening or np.linalg.norm(b2.v2 - b1.v2) >= opening:
                    continue
                if np.array_equal(b2.phi, b1.phi) or not cone_contains(cone, b2.phi):
                    continue
                t = 2.0 * float(np.linalg.norm(b2.phi - b1.phi)) / gap
                if not (0.0 < t <= min(t0, 1.0)):
                    continue
                g2_x1 = Geodesic(space, b1.x, tgt[b1.j2])(t)
                g1_x2 = Geodesic(space, b2.x, tgt[b2.j1])(t)
                swapped = space.distance(b2.x, g2_x1) ** 2 + space.distance(b1.x, g1_x2) ** 2
                original = space.distance(b2.x, g1_x2) ** 2 + space.distance(b1.x, g2_x1) ** 2
                if swapped < original - 1e-12 * max(1.0, original):
                    used = WitnessParams(pr.k_class, pr.eps, pr.eps_hat, t, pr.delta)
                    return WitnessResult(
                        True, "witness found", used, (b2.row, b1.row), (b2.j1, b1.j2),
                        {"x2": b2.x, "x1": b1.x, "g2_x1_t": g2_x1, "g1_x2_t": g1_x2},
                        t, swapped, original, original - swapped, opening, widenings, r)
        if opening >= max_opening:
            break
        level *= 2.0
        widenings += 1
    return WitnessResult(False, "no cone configuration found", opening=max_opening,
                         widenings=widenings)
