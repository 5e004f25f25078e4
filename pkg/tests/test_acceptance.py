"""Acceptance suite: eight criteria at their stated tolerances.

Each test prints one ``criterion N: PASS|FAIL ...`` line (visible with or
without ``-s``) and then asserts.  Run directly with
``python3 tests/test_acceptance.py`` or through pytest.
"""

import math
import time

import numpy as np
import pytest

import oracles
from alexot.charts import Chart, geodesic_direction
from alexot.measures import Box, DiscreteMeasure, SphereCap, sample_diffuse
from alexot.model import comparison_angle
from alexot.monotonicity import SupportSet, check_cyclical, delta_of_C, restrict, witness_search
from alexot.rng import SplitMix64
from alexot.scenarios import fixture_chart, run_scenario, split_fixture
from alexot.solver import TransportPlan, solve
from alexot.spaces import Euclidean, Geodesic, MetricCone, Sphere, alexandrov_check, angle_estimate

SQUARE = Box((0, 0), (1, 1))


@pytest.fixture
def verdict(capsys):
    def emit(number, ok, detail):
        with capsys.disabled():
            print(f"\ncriterion {number}: {'PASS' if ok else 'FAIL'} - {detail}")
        assert ok, detail
    return emit


def random_instances(count=100):
    for seed in range(count):
        n = 2 + seed % 6
        yield sample_diffuse(SQUARE, n, 1000 + 2 * seed), sample_diffuse(SQUARE, n, 1001 + 2 * seed)


def test_criterion_1_solver_matches_brute_force(verdict):
    start = time.perf_counter()
    worst = 0.0
    for mu0, mu1 in random_instances():
        plan = solve(mu0, mu1)
        best = oracles.permutation_minimum(oracles.sq_dist(mu0.points, mu1.points))
        worst = max(worst, abs(plan.cost - best))
    elapsed = time.perf_counter() - start
    verdict(1, worst <= 1e-9 and elapsed < 10.0,
            f"max |simplex - brute force| = {worst:.2e} (tol 1e-9), {elapsed:.2f}s (limit 10s)")


def test_criterion_2_optimal_supports_are_monotone(verdict):
    worst_mean = math.inf
    certified = 0
    for mu0, mu1 in random_instances():
        res = check_cyclical(SupportSet.from_plan(solve(mu0, mu1)))
        certified += res.certified
        if res.certified and res.min_cycle_mean is not None:
            worst_mean = min(worst_mean, res.min_cycle_mean)
    rng = SplitMix64(77)
    caught = tried = 0
    seed = 0
    while tried < 100:
        n = 3 + seed % 5
        mu0, mu1 = sample_diffuse(SQUARE, n, 5000 + 2 * seed), sample_diffuse(SQUARE, n, 5001 + 2 * seed)
        seed += 1
        best = solve(mu0, mu1).cost
        perm = list(range(n))
        for i in range(n - 1, 0, -1):  # Fisher-Yates with the package generator
            j = rng.randbelow(i + 1)
            perm[i], perm[j] = perm[j], perm[i]
        plan = TransportPlan.from_dense(np.eye(n)[perm] / n, mu0, mu1)
        cost = float(np.sum(oracles.sq_dist(mu0.points, mu1.points)[range(n), perm]) / n)
        if cost <= best + 1e-6:
            continue
        tried += 1
        caught += not check_cyclical(SupportSet.from_plan(plan)).certified
    ok = certified == 100 and worst_mean >= -1e-9 and caught == 100
    verdict(2, ok, f"{certified}/100 optimal supports certified (min cycle mean {worst_mean:.3e}); "
                   f"{caught}/100 non-optimal permutation plans yield a violating cycle")


def test_criterion_3_restriction_preserves_monotonicity(verdict):
    spaces = [
        (Euclidean(2), SQUARE),
        (Sphere(2, 1.0), SphereCap((0, 0, 1), 1.2)),
        (MetricCone(1.5 * math.pi), Box((0.05, 0.0), (1.0, 1.5 * math.pi))),
    ]
    violations = checks = 0
    worst = math.inf
    for s_idx, (space, region) in enumerate(spaces):
        for k in range(20):
            base = 7000 + 100 * s_idx + 2 * k
            mu0 = sample_diffuse(region, 8, base, space)
            mu1 = sample_diffuse(region, 8, base + 1, space)
            sup = SupportSet.from_plan(solve(mu0, mu1))
            for t in (0.1, 0.25, 0.5, 0.75, 0.9):
                res = check_cyclical(restrict(sup, t))
                checks += 1
                violations += not res.certified
                if res.certified:
                    worst = min(worst, res.min_cycle_mean)
    verdict(3, violations == 0 and worst >= -1e-9,
            f"{violations} violations in {checks} restricted supports "
            f"(min cycle mean {worst:.3e}) on R^2, S^2, cone 3pi/2")


def test_criterion_4_delta_bound(verdict):
    C = 2.0
    delta = delta_of_C(C).delta
    grid = oracles.coarse_delta(C)
    rng = np.random.default_rng(2024)
    margin = math.inf
    kept = 0
    while kept < 1_000_000:
        m = 400_000
        ang = rng.uniform(0, 2 * np.pi, m)
        y2 = np.column_stack([np.cos(ang), np.sin(ang)])
        y1 = rng.uniform(-3, 3, (m, 2))
        gap = np.linalg.norm(y1 - y2, axis=1)
        keep = (gap >= 1 / C) & (gap <= C)
        y1, y2 = y1[keep][: 1_000_000 - kept], y2[keep][: 1_000_000 - kept]
        kept += len(y1)
        lhs = 0.5 * ((y1 + y2) ** 2).sum(1)
        rhs = (1 - delta) * ((y1 ** 2).sum(1) + (y2 ** 2).sum(1))
        margin = min(margin, float((rhs - lhs).min()))
    deltas = [delta_of_C(c).delta for c in (1.5, 2.0, 4.0, 10.0)]
    monotone = all(b <= a for a, b in zip(deltas, deltas[1:]))
    ok = abs(delta - grid) <= 1e-4 and margin >= -1e-10 and monotone
    verdict(4, ok, f"delta(2) = {delta:.7f} vs grid {grid:.7f}; min margin over {kept} samples "
                   f"{margin:.3e}; delta over C=1.5,2,4,10 non-increasing: {monotone}")


def _random_configs(space, region, n, rng):
    out = []
    while len(out) < n:
        x, y, z = (space.point(region.draw(rng)) for _ in range(3))
        d = space.distance(x, y)
        if d > 1e-9:
            out.append((x, y, z, rng.random() * d))
    return out


def test_criterion_5_comparison_geometry(verdict):
    rng = SplitMix64(55)
    sphere, cone, wide = Sphere(2, 1.0), MetricCone(1.5 * math.pi), MetricCone(3 * math.pi)
    sphere_min = min(alexandrov_check(sphere, *c, 1.0)
                     for c in _random_configs(sphere, SphereCap((0, 0, 1), math.pi), 1000, rng))
    cone_min = min(alexandrov_check(cone, *c, 0.0)
                   for c in _random_configs(cone, Box((0, 0), (1, cone.total_angle)), 1000, rng))
    wide_neg = sum(alexandrov_check(wide, *c, 0.0) < 0
                   for c in _random_configs(wide, Box((0, 0), (1, wide.total_angle)), 1000, rng))
    continuity = 0.0
    nrng = np.random.default_rng(5)
    for _ in range(200):
        sides = oracles.random_triangle(nrng, 0.0)
        for k in (1e-8, -1e-8):
            continuity = max(continuity, abs(comparison_angle(k, sides) - comparison_angle(0.0, sides)))
    sched = [0.4, 0.2, 0.1, 0.05, 0.025]
    drop = -math.inf
    for _ in range(20):
        p = sphere.point(SphereCap((0, 0, 1), math.pi).draw(rng))
        q1, q2 = (sphere.point(SphereCap(tuple(p), 2.0).draw(rng)) for _ in range(2))
        vals = angle_estimate(sphere, Geodesic(sphere, p, q1), Geodesic(sphere, p, q2), sched, 1.0).values
        drop = max(drop, max(a - b for a, b in zip(vals, vals[1:])))
        c0 = (rng.uniform(0.3, 1.0), rng.uniform(0, cone.total_angle))
        c1 = (rng.uniform(0.3, 1.0), rng.uniform(0, cone.total_angle))
        c2 = (rng.uniform(0.3, 1.0), rng.uniform(0, cone.total_angle))
        vals = angle_estimate(cone, Geodesic(cone, c0, c1), Geodesic(cone, c0, c2), sched, 0.0).values
        drop = max(drop, max(a - b for a, b in zip(vals, vals[1:])))
    ok = sphere_min >= -1e-12 and cone_min >= -1e-12 and wide_neg >= 1 and continuity <= 1e-6 \
        and drop <= 1e-9
    verdict(5, ok, f"min slack sphere {sphere_min:.2e}, cone(3pi/2) {cone_min:.2e}; cone(3pi) "
                   f"negative witnesses {wide_neg}/1000; k->0 gap {continuity:.2e}; "
                   f"max angle decrease {drop:.2e}")


def test_criterion_6_first_variation_on_sphere(verdict):
    rng = np.random.default_rng(66)
    s = Sphere(2, 1.0)
    worst, done = 0.0, 0
    while done < 50:
        p = oracles.random_sphere_point(rng)
        a1, a2 = oracles.random_sphere_point(rng), oracles.random_sphere_point(rng)
        if not all(0.5 <= s.distance(p, a) <= 2.5 for a in (a1, a2)) or s.distance(a1, a2) < 0.3:
            continue
        v = rng.normal(size=3)
        v -= (v @ p) * p
        v /= np.linalg.norm(v)
        chart = Chart(s, p, (a1, a2), 0.1)
        end = math.cos(0.08) * p + math.sin(0.08) * v
        est = geodesic_direction(chart, Geodesic(s, p, end))
        want = [-math.cos(oracles.sphere_tangent_angle(p, v, a)) for a in (a1, a2)]
        worst = max(worst, float(np.max(np.abs(est.limit - want))))
        done += 1
    verdict(6, worst <= 1e-3, f"max |direction - (-cos angle)| over 50 configurations = {worst:.2e} "
                              f"(tol 1e-3)")


def test_criterion_7_map_versus_split(verdict):
    start = time.perf_counter()
    seg = run_scenario("map-vs-split", {"preset": "segment"}).report
    seg_ok = seg["verdict"] == "split" and seg["unique"] is False
    good = 0
    for seed in range(100):
        rep = run_scenario("map-vs-split", {"seed": 100 + 2 * seed,
                                            "mu0": {"kind": "diffuse", "n": 10},
                                            "mu1": {"kind": "diffuse", "n": 10}}).report
        good += rep["verdict"] == "map" and rep["unique"] is True
    elapsed = time.perf_counter() - start
    ok = seg_ok and good >= 99 and elapsed < 30.0
    verdict(7, ok, f"segment instance: {seg['verdict']}/{'unique' if seg['unique'] else 'non-unique'}; "
                   f"{good}/100 diffuse 10x10 instances map+unique (need 99); {elapsed:.2f}s (limit 30s)")


def test_criterion_8_witness_reenactment(verdict):
    chart = fixture_chart()
    w = witness_search(split_fixture(0.05), chart)
    p = w.points if w.found else {}

    def sq(a, b):
        return float(np.sum((np.asarray(a) - np.asarray(b)) ** 2))

    gap = math.inf
    if w.found:
        direct = (sq(p["x2"], p["g1_x2_t"]) + sq(p["x1"], p["g2_x1_t"])
                  - sq(p["x2"], p["g2_x1_t"]) - sq(p["x1"], p["g1_x2_t"]))
        gap = abs(direct - w.deficit)
    rng = np.random.default_rng(88)
    none = 0
    for _ in range(20):
        n = 6
        mu0 = DiscreteMeasure.uniform(rng.uniform(-0.2, 0.2, size=(n, 2)))
        mu1 = DiscreteMeasure.uniform(rng.uniform(-1, 1, size=(n, 2)))
        plan = TransportPlan.from_dense(np.eye(n)[rng.permutation(n)] / n, mu0, mu1)
        none += not witness_search(plan, chart).found
    ok = w.found and w.deficit > 0 and gap <= 1e-10 and none == 20
    verdict(8, ok, f"fixture witness deficit {w.deficit if w.found else float('nan'):.7f}, "
                   f"|direct - reported| = {gap:.2e} (tol 1e-10); {none}/20 permutation plans give none")


if __name__ == "__main__":
    raise SystemExit(pytest.main([__file__, "-q"]))
