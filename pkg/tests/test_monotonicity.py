import math

import numpy as np
import pytest

import oracles
from alexot.charts import Chart
from alexot.errors import GeometryError
from alexot.measures import Box, DiscreteMeasure, SphereCap, sample_diffuse
from alexot.monotonicity import (SupportSet, WitnessParams, check_cyclical, delta_of_C, k_class,
                                 restrict, witness_search)
from alexot.scenarios import fixture_chart, split_fixture
from alexot.solver import TransportPlan, mix_plans, solve, uniqueness_probe
from alexot.spaces import Euclidean, MetricCone, Sphere

LINE = Euclidean(1)


def line_support(xs, ys):
    return SupportSet(np.array(xs, float).reshape(-1, 1), np.array(ys, float).reshape(-1, 1), LINE)


def test_identity_pairs_are_certified():
    res = check_cyclical(line_support([0, 1], [0, 1]))
    assert res.certified
    # the only cycle swaps both targets: total exchange weight 2 over 2 arcs
    assert res.min_cycle_mean == pytest.approx(1.0)


def test_crossed_pairs_violate():
    res = check_cyclical(line_support([0, 1], [1, 0]))
    assert not res.certified
    assert (res.original, res.permuted, res.deficit) == pytest.approx((2.0, 0.0, 2.0))
    assert sorted(res.indices) == [0, 1]


def test_six_by_six_optimal_support_agrees_with_subset_enumeration():
    mu0 = sample_diffuse(Box((0, 0), (1, 1)), 6, 60)
    mu1 = sample_diffuse(Box((0, 0), (1, 1)), 6, 61)
    sup = SupportSet.from_plan(solve(mu0, mu1))
    assert check_cyclical(sup).certified
    assert oracles.subset_rearrangement_gain(sup.cost_matrix(), 4) <= 1e-9


def test_verdict_matches_permutation_enumeration_on_random_supports():
    rng = np.random.default_rng(21)
    verdicts = []
    for trial in range(50):
        n = int(rng.integers(2, 9))
        xs = rng.uniform(size=(n, 2))
        if trial % 2:
            ys = xs[rng.permutation(n)] + rng.normal(scale=0.3, size=(n, 2))
        else:  # monotone by construction: optimal pairing of random clouds
            mu0, mu1 = DiscreteMeasure.uniform(xs), DiscreteMeasure.uniform(rng.uniform(size=(n, 2)))
            ys = mu1.points[solve(mu0, mu1).cols]
        sup = SupportSet(xs, ys, Euclidean(2))
        gain = oracles.best_rearrangement_gain(sup.cost_matrix())
        res = check_cyclical(sup)
        assert res.certified == (gain <= 1e-9)
        if n <= 4:
            assert res.certified == (oracles.subset_rearrangement_gain(sup.cost_matrix()) <= 1e-9)
        if not res.certified:
            C = sup.cost_matrix()
            idx = res.indices
            shifted = idx[1:] + idx[:1]
            assert res.original == pytest.approx(sum(C[i, i] for i in idx))
            assert res.permuted == pytest.approx(sum(C[j, i] for i, j in zip(idx, shifted)))
            assert res.deficit == pytest.approx(res.original - res.permuted)
        verdicts.append(res.certified)
    assert any(verdicts) and not all(verdicts)


def test_restrict_examples():
    sup = SupportSet(np.array([[0.0, 0.0], [1.0, 1.0]]), np.array([[2.0, 0.0], [1.0, 3.0]]), Euclidean(2))
    at0 = restrict(sup, 0.0)
    assert np.array_equal(at0.targets, at0.sources)
    at1 = restrict(sup, 1.0)
    assert np.array_equal(at1.targets, sup.targets)
    mid = restrict(SupportSet(np.array([[0.0, 0.0]]), np.array([[2.0, 0.0]]), Euclidean(2)), 0.5)
    assert np.allclose(mid.targets, [[1.0, 0.0]])
    with pytest.raises(GeometryError):
        restrict(sup, 1.5)


@pytest.mark.parametrize("space,region", [
    (Euclidean(2), Box((0, 0), (1, 1))),
    (Sphere(2, 1.0), SphereCap((0, 0, 1), 1.2)),
    (MetricCone(1.5 * math.pi), Box((0.05, 0.0), (1.0, 1.5 * math.pi))),
])
def test_restriction_keeps_optimal_supports_monotone(space, region):
    for seed in range(5):
        mu0 = sample_diffuse(region, 7, 10 * seed, space)
        mu1 = sample_diffuse(region, 7, 10 * seed + 1, space)
        sup = SupportSet.from_plan(solve(mu0, mu1))
        for t in (0.1, 0.25, 0.5, 0.75, 0.9):
            res = check_cyclical(restrict(sup, t))
            assert res.certified and res.min_cycle_mean >= -1e-9


# -- delta(C) ----------------------------------------------------------------------

def test_delta_of_two():
    prob = delta_of_C(2.0)
    assert prob.delta == pytest.approx(0.03846, abs=1e-5)
    assert prob.delta == pytest.approx(oracles.coarse_delta(2.0), abs=1e-4)
    assert abs(prob.residual()) <= 1e-12


def test_delta_closed_form_at_reported_maximizer():
    for C in (1.5, 2.0, 4.0, 10.0):
        prob = delta_of_C(C)
        y1 = prob.y1
        ratio = 0.5 * float((y1 + prob.y2) @ (y1 + prob.y2)) / float(y1 @ y1 + 1.0)
        assert prob.delta == pytest.approx(1 - ratio, abs=1e-12)
        assert abs(np.linalg.norm(prob.y1 - prob.y2) - 1 / C) <= 1e-6


def test_delta_is_non_increasing():
    deltas = [delta_of_C(C).delta for C in (1.5, 2.0, 4.0, 10.0)]
    assert all(d > 0 for d in deltas)
    assert all(b <= a for a, b in zip(deltas, deltas[1:]))


def test_delta_inequality_on_samples():
    C = 2.0
    delta = delta_of_C(C).delta
    rng = np.random.default_rng(4)
    ang = rng.uniform(0, 2 * np.pi, 200_000)
    y2 = np.column_stack([np.cos(ang), np.sin(ang)])
    y1 = rng.uniform(-3, 3, (200_000, 2))
    gap = np.linalg.norm(y1 - y2, axis=1)
    keep = (gap >= 1 / C) & (gap <= C)
    y1, y2 = y1[keep], y2[keep]
    lhs = 0.5 * ((y1 + y2) ** 2).sum(1)
    rhs = (1 - delta) * ((y1 ** 2).sum(1) + (y2 ** 2).sum(1))
    assert (rhs - lhs).min() >= -1e-10


def test_delta_argument_checks():
    with pytest.raises(GeometryError):
        delta_of_C(1.0)
    with pytest.raises(GeometryError):
        delta_of_C(2.0, resolution=100)


# -- witness search ----------------------------------------------------------------

def sq(a, b):
    return float(np.sum((np.asarray(a) - np.asarray(b)) ** 2))


def test_fixture_witness_deficit_matches_direct_evaluation():
    h = 0.05
    w = witness_search(split_fixture(h), fixture_chart())
    assert w.found
    p = w.points
    original = sq(p["x2"], p["g1_x2_t"]) + sq(p["x1"], p["g2_x1_t"])
    swapped = sq(p["x2"], p["g2_x1_t"]) + sq(p["x1"], p["g1_x2_t"])
    assert w.deficit == pytest.approx(original - swapped, abs=1e-10)
    assert w.deficit > 0
    # translated targets: the deficit is 2 t h - 2 h^2 in closed form
    assert w.deficit == pytest.approx(2 * w.t * h - 2 * h * h, abs=1e-12)
    assert w.params.k_class == 2 and w.widenings >= 1 and w.opening <= math.pi / 4 + 1e-12


def test_fixture_witness_is_confirmed_as_two_cycle():
    chart = fixture_chart()
    w = witness_search(split_fixture(), chart)
    res = check_cyclical(w.restricted_support(chart.space))
    assert not res.certified
    assert abs(res.deficit - w.deficit) <= 1e-10


def test_permutation_plans_have_no_witness():
    rng = np.random.default_rng(2)
    chart = Chart(Euclidean(2), np.array([0.5, 0.5]),
                  (np.array([-100.0, 0.5]), np.array([0.5, 100.0])), 1.0)
    for _ in range(10):
        n = 6
        mu0 = DiscreteMeasure.uniform(rng.uniform(size=(n, 2)))
        mu1 = DiscreteMeasure.uniform(rng.uniform(size=(n, 2)))
        plan = TransportPlan.from_dense(np.eye(n)[rng.permutation(n)] / n, mu0, mu1)
        w = witness_search(plan, chart)
        assert not w.found and w.reason == "no split row"


def test_symmetric_segment_split_plan_has_no_witness():
    mu0 = DiscreteMeasure.uniform([[0.0, y] for y in np.linspace(-1, 1, 4)])
    mu1 = DiscreteMeasure.uniform([[-1.0, 0.0], [1.0, 0.0]])
    probe = uniqueness_probe(mu0, mu1)
    plan = mix_plans(*probe.witnesses)
    chart = Chart(Euclidean(2), np.zeros(2), (np.array([-100.0, 0.0]), np.array([0.0, 100.0])), 2.0)
    assert not witness_search(plan, chart).found


def test_k_class_of_fixture():
    e = Euclidean(2)
    assert k_class(e, (0, 0), (0, 1), (1, 0)) == 2


def test_witness_params_consistency():
    p = WitnessParams.for_class(2)
    p.check()
    assert p.eps_hat == pytest.approx(p.eps / (80 * 16))
    with pytest.raises(GeometryError):
        WitnessParams(2, 0.01, 0.5).check()
