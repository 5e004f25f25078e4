"""Exact discrete Kantorovich problem with cost d^2.

The transportation LP is solved with the network simplex method on the
bipartite graph rows -> columns.  The basis is a spanning tree with
m + n - 1 cells; entering and leaving cells are chosen by Bland's rule
(lowest row-major index), which rules out cycling on degenerate pivots and
makes runs reproducible.  Returned plans are vertices of the transport
polytope, so a plan between uniform measures of equal size is always a
permutation.
"""

from __future__ import annotations

import itertools
import math
from collections import deque
from dataclasses import dataclass, field

import numpy as np

from .errors import SolverError
from .measures import DiscreteMeasure
from .rng import SplitMix64

MASS_TOL = 1e-9
MARGINAL_TOL = 1e-10


@dataclass
class TransportPlan:
    """Sparse coupling: ``rows[e], cols[e]`` carries ``mass[e] > 0``."""

    shape: tuple
    rows: np.ndarray
    cols: np.ndarray
    mass: np.ndarray
    source: DiscreteMeasure | None = None
    target: DiscreteMeasure | None = None
    cost: float | None = None
    meta: dict = field(default_factory=dict)

    @classmethod
    def from_dense(cls, matrix, source=None, target=None, **kw) -> "TransportPlan":
        M = np.asarray(matrix, dtype=float)
        r, c = np.nonzero(M > 0)
        return cls(M.shape, r, c, M[r, c], source, target, **kw)

    def dense(self) -> np.ndarray:
        M = np.zeros(self.shape)
        M[self.rows, self.cols] = self.mass
        return M

    @property
    def support(self) -> list[tuple[int, int]]:
        return list(zip(self.rows.tolist(), self.cols.tolist()))

    def support_above(self, tol: float = MASS_TOL) -> list[tuple[int, int]]:
        keep = self.mass > tol
        return list(zip(self.rows[keep].tolist(), self.cols[keep].tolist()))

    def row_sums(self) -> np.ndarray:
        return np.bincount(self.rows, self.mass, minlength=self.shape[0])

    def col_sums(self) -> np.ndarray:
        return np.bincount(self.cols, self.mass, minlength=self.shape[1])

    def marginal_error(self, a=None, b=None) -> float:
        a = self.source.weights if a is None else np.asarray(a)
        b = self.target.weights if b is None else np.asarray(b)
        return float(max(np.abs(self.row_sums() - a).max(), np.abs(self.col_sums() - b).max(),
                         abs(self.mass.sum() - 1.0)))


def cost_matrix(mu0: DiscreteMeasure, mu1: DiscreteMeasure, space=None) -> np.ndarray:
    """c[i, j] = d(x_i, y_j)^2 in ``space`` (default: the source measure's space)."""
    space = space or mu0.space
    D = space.distance_matrix(mu0.points, mu1.points)
    return D * D


def _check_problem(a, b, C):
    if C.shape != (len(a), len(b)):
        raise SolverError(f"cost matrix shape {C.shape} does not match supports {(len(a), len(b))}")
    if not np.all(np.isfinite(C)):
        raise SolverError("non-finite cost entry")
    if np.any(C < 0):
        raise SolverError("negative cost entry")


def _northwest_corner(a, b):
    m, n = len(a), len(b)
    a, b = a.astype(float).copy(), b.astype(float).copy()
    cells, flows = [], []
    i = j = 0
    while True:
        x = min(a[i], b[j])
        cells.append((i, j))
        flows.append(x)
        a[i] -= x
        b[j] -= x
        if i == m - 1 and j == n - 1:
            break
        if j == n - 1 or (i < m - 1 and a[i] <= b[j]):
            b[j] += a[i]  # leftover rounding stays in the column
            a[i] = 0.0
            i += 1
        else:
            a[i] += b[j]
            b[j] = 0.0
            j += 1
    return cells, flows


class NetworkSimplex:
    """One solve of the transportation problem; not reusable across threads mid-solve."""

    def __init__(self, a, b, C, max_pivots=None):
        self.a = np.asarray(a, dtype=float)
        self.b = np.asarray(b, dtype=float)
        self.C = np.asarray(C, dtype=float)
        _check_problem(self.a, self.b, self.C)
        m, n = self.C.shape
        self.m, self.n = m, n
        self.max_pivots = max_pivots or 50 * m * n + 1000
        self.tol = 1e-12 * max(1.0, float(np.abs(self.C).max()))
        self.pivots = 0

    def _potentials(self):
        m, n = self.m, self.n
        u = np.full(m, np.nan)
        v = np.full(n, np.nan)
        u[0] = 0.0
        queue = deque([("r", 0)])
        while queue:
            kind, k = queue.popleft()
            if kind == "r":
                for j in self.row_adj[k]:
                    if np.isnan(v[j]):
                        v[j] = self.C[k, j] - u[k]
                        queue.append(("c", j))
            else:
                for i in self.col_adj[k]:
                    if np.isnan(u[i]):
                        u[i] = self.C[i, k] - v[k]
                        queue.append(("r", i))
        return u, v

    def _tree_path(self, i0, j0):
        """Cells on the tree path from row ``i0`` to column ``j0``, in order."""
        parent = {("r", i0): None}
        queue = deque([("r", i0)])
        target = ("c", j0)
        while queue:
            node = queue.popleft()
            if node == target:
                break
            kind, k = node
            nbrs = [("c", j) for j in self.row_adj[k]] if kind == "r" else [
                ("r", i) for i in self.col_adj[k]]
            for nb in nbrs:
                if nb not in parent:
                    parent[nb] = node
                    queue.append(nb)
        path = []
        node = target
        while parent[node] is not None:
            prev = parent[node]
            cell = (prev[1], node[1]) if prev[0] == "r" else (node[1], prev[1])
            path.append(cell)
            node = prev
        return path[::-1]

    def solve(self):
        m, n = self.m, self.n
        cells, flows = _northwest_corner(self.a, self.b)
        self.flow = dict(zip(cells, flows))
        self.row_adj = [set() for _ in range(m)]
        self.col_adj = [set() for _ in range(n)]
        for i, j in cells:
            self.row_adj[i].add(j)
            self.col_adj[j].add(i)
        while True:
            u, v = self._potentials()
            R = self.C - u[:, None] - v[None, :]
            neg = np.flatnonzero(R.ravel() < -self.tol)
            if len(neg) == 0:
                break
            if self.pivots >= self.max_pivots:
                raise SolverError("network simplex exceeded its pivot budget")
            ei, ej = divmod(int(neg[0]), n)
            path = self._tree_path(ei, ej)
            # reversed path alternates -, +, -, ... starting at the column end
            minus = path[::-1][0::2]
            plus = path[::-1][1::2]
            theta = min(self.flow[c] for c in minus)
            leaving = min((c for c in minus if self.flow[c] == theta), key=lambda c: c[0] * n + c[1])
            for c in minus:
                self.flow[c] = max(self.flow[c] - theta, 0.0)
            for c in plus:
                self.flow[c] += theta
            del self.flow[leaving]
            self.row_adj[leaving[0]].discard(leaving[1])
            self.col_adj[leaving[1]].discard(leaving[0])
            self.flow[(ei, ej)] = theta
            self.row_adj[ei].add(ej)
            self.col_adj[ej].add(ei)
            self.pivots += 1
        return self.flow


def solve(mu0: DiscreteMeasure, mu1: DiscreteMeasure, cost=None) -> TransportPlan:
    """Exactly optimal vertex plan from ``mu0`` to ``mu1``.

    ``cost`` defaults to squared distances in the source measure's space.
    """
    C = cost_matrix(mu0, mu1) if cost is None else np.asarray(cost, dtype=float)
    if C.ndim != 2:
        raise SolverError("cost must be a matrix")
    ns = NetworkSimplex(mu0.weights, mu1.weights, C)
    flow = ns.solve()
    basis = sorted(flow)
    entries = [(i, j, f) for (i, j), f in sorted(flow.items()) if f > 0]
    rows = np.array([e[0] for e in entries], dtype=int)
    cols = np.array([e[1] for e in entries], dtype=int)
    mass = np.array([e[2] for e in entries], dtype=float)
    plan = TransportPlan(C.shape, rows, cols, mass, mu0, mu1)
    plan.cost = plan_cost(plan, C)
    plan.meta = {"algorithm": "network_simplex", "pivot_rule": "bland", "pivots": ns.pivots,
                 "basis_size": len(basis)}
    return plan


def plan_cost(plan: TransportPlan, cost) -> float:
    C = np.asarray(cost, dtype=float)
    if C.shape != tuple(plan.shape):
        raise SolverError(f"cost shape {C.shape} does not match plan shape {tuple(plan.shape)}")
    return float(np.dot(plan.mass, C[plan.rows, plan.cols]))


@dataclass
class BruteForceResult:
    cost: float
    permutations: list
    permutation_sum: float


def brute_force_solve(mu0: DiscreteMeasure, mu1: DiscreteMeasure, cost=None,
                      max_size: int = 8) -> BruteForceResult:
    """Exhaustive Monge search over all permutations (uniform weights, n <= 8).

    ``cost`` is the Monge cost (1/n) sum_i c(x_i, y_sigma(i)); every minimizing
    permutation is listed (ties within 1e-12 relative).
    """
    n = len(mu0)
    if len(mu1) != n:
        raise SolverError("brute force needs equal support sizes")
    if n > max_size:
        raise SolverError("oracle scale exceeded")
    if not (mu0.is_uniform and mu1.is_uniform):
        raise SolverError("brute force needs uniform weights")
    C = cost_matrix(mu0, mu1) if cost is None else np.asarray(cost, dtype=float)
    _check_problem(mu0.weights, mu1.weights, C)
    perms = np.array(list(itertools.permutations(range(n))), dtype=int)
    totals = C[np.arange(n), perms].sum(axis=1)
    best = totals.min()
    tie = 1e-12 * max(1.0, abs(best))
    argmin = [tuple(int(x) for x in p) for p in perms[totals <= best + tie]]
    return BruteForceResult(float(best / n), argmin, float(best))


@dataclass
class MapCertificate:
    verdict: str
    split_rows: list
    assignment: dict

    @property
    def is_map(self) -> bool:
        return self.verdict == "map"


def detect_map(plan: TransportPlan, mass_tol: float = MASS_TOL) -> MapCertificate:
    """Row ``i`` is split when it carries at least two entries above ``mass_tol``."""
    row_w = plan.row_sums() if plan.source is None else plan.source.weights
    if not (0.0 <= mass_tol < row_w.min() / 2):
        raise SolverError("mass_tol must lie in [0, min weight / 2)")
    carriers: dict[int, list] = {}
    for i, j, w in zip(plan.rows.tolist(), plan.cols.tolist(), plan.mass.tolist()):
        if w > mass_tol:
            carriers.setdefault(i, []).append(j)
    split = sorted(i for i, js in carriers.items() if len(js) >= 2)
    assignment = {i: js[0] for i, js in sorted(carriers.items()) if len(js) == 1}
    return MapCertificate("split" if split else "map", split, assignment)


def mix_plans(p: TransportPlan, q: TransportPlan, weight: float = 0.5) -> TransportPlan:
    """Convex combination (1 - weight) p + weight q."""
    if tuple(p.shape) != tuple(q.shape):
        raise SolverError("plans have different shapes")
    M = (1 - weight) * p.dense() + weight * q.dense()
    out = TransportPlan.from_dense(M, p.source, p.target)
    out.meta = {"mixture_of": [p.meta, q.meta], "weight": weight}
    return out


@dataclass
class ProbeResult:
    unique: bool
    witnesses: list
    costs: list
    supports: list
    max_cost_gap: float


def uniqueness_probe(mu0: DiscreteMeasure, mu1: DiscreteMeasure, cost=None,
                     n_perturbations: int = 8, eta: float = 1e-7, seed: int = 0,
                     cost_tol: float = 1e-9) -> ProbeResult:
    """Re-solve under small random cost perturbations and compare supports.

    Two returned plans whose positive supports differ while their unperturbed
    costs agree within ``cost_tol`` witness non-uniqueness.
    """
    if n_perturbations < 2:
        raise SolverError("need at least two perturbations")
    if not eta > 0:
        raise SolverError("eta must be positive")
    C = cost_matrix(mu0, mu1) if cost is None else np.asarray(cost, dtype=float)
    rng = SplitMix64(seed)
    plans = [solve(mu0, mu1, C)]
    for _ in range(n_perturbations):
        noise = np.array([rng.uniform(-eta, eta) for _ in range(C.size)]).reshape(C.shape)
        p = solve(mu0, mu1, np.maximum(C + noise, 0.0))
        p.cost = plan_cost(p, C)
        plans.append(p)
    supports = [frozenset(p.support_above()) for p in plans]
    costs = [p.cost for p in plans]
    gap = max(costs) - min(costs)
    for a, b in itertools.combinations(range(len(plans)), 2):
        if supports[a] != supports[b] and abs(costs[a] - costs[b]) <= cost_tol:
            return ProbeResult(False, [plans[a], plans[b]], costs, supports, gap)
    return ProbeResult(True, [plans[0]], costs, supports, gap)


def marginals_ok(plan: TransportPlan, tol: float = MARGINAL_TOL) -> bool:
    return plan.marginal_error() <= tol and math.isfinite(plan.marginal_error())
