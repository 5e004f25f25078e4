import json
import xml.etree.ElementTree as ET

import numpy as np
import pytest

from alexot import io as aio
from alexot.errors import ConfigError, MeasureError
from alexot.measures import Box, DiscreteMeasure, SphereCap, sample_diffuse
from alexot.monotonicity import SupportSet, check_cyclical
from alexot.plot import emit_plot
from alexot.solver import solve
from alexot.spaces import Euclidean

SVG = "{http://www.w3.org/2000/svg}"


def test_csv_single_row(tmp_path):
    f = tmp_path / "one.csv"
    f.write_text("0,0,1.0\n")
    m = aio.ingest_measure(f)
    assert len(m) == 1 and m.weights[0] == 1.0 and np.array_equal(m.points, [[0.0, 0.0]])


def test_csv_with_bad_weight_sum(tmp_path):
    f = tmp_path / "short.csv"
    f.write_text("x0,x1,weight\n0,0,0.5\n1,0,0.4\n")
    with pytest.raises(MeasureError, match="weights not normalized") as info:
        aio.ingest_measure(f)
    assert info.value.code == "weights_not_normalized"


@pytest.mark.parametrize("text,code", [
    ("0,0,0.5\n0,0,0.5\n", "duplicate_points"),
    ("0,0,0.5\n1,0.5\n", "dimension_mismatch"),
    ("0,0,0.5\n1,zero,0.5\n", "parse_error"),
])
def test_csv_error_codes(tmp_path, text, code):
    f = tmp_path / "bad.csv"
    f.write_text(text)
    with pytest.raises(MeasureError) as info:
        aio.ingest_measure(f)
    assert info.value.code == code


def test_unreadable_and_unknown_format(tmp_path):
    with pytest.raises(MeasureError) as info:
        aio.ingest_measure(tmp_path / "missing.csv")
    assert info.value.code == "unreadable"
    f = tmp_path / "m.txt"
    f.write_text("0,0,1\n")
    with pytest.raises(MeasureError) as info:
        aio.ingest_measure(f)
    assert info.value.code == "unknown_format"
    assert len(aio.ingest_measure(f, "csv")) == 1


def test_json_errors(tmp_path):
    f = tmp_path / "m.json"
    f.write_text("{not json")
    with pytest.raises(MeasureError) as info:
        aio.ingest_measure(f)
    assert info.value.code == "parse_error"


@pytest.mark.parametrize("fmt", ["json", "csv"])
def test_round_trip_is_bit_identical(tmp_path, fmt):
    m = sample_diffuse(Box((0, 0), (1, 1)), 40, 17)
    path = tmp_path / f"m.{fmt}"
    aio.write_measure(m, path)
    back = aio.ingest_measure(path)
    assert back.points.tobytes() == m.points.tobytes()
    assert back.weights.tobytes() == m.weights.tobytes()
    again = tmp_path / f"again.{fmt}"
    aio.write_measure(back, again)
    assert path.read_bytes() == again.read_bytes()


def test_sphere_measure_keeps_its_space():
    m = sample_diffuse(SphereCap((0, 0, 1), 0.5), 10, 2)
    back = aio.measure_from_json(aio.measure_to_json(m))
    assert back.space.to_spec() == m.space.to_spec()


def test_plan_and_support_round_trip():
    m0 = sample_diffuse(Box((0, 0), (1, 1)), 6, 1)
    m1 = sample_diffuse(Box((0, 0), (1, 1)), 6, 2)
    plan = solve(m0, m1)
    back = aio.plan_from_dict(json.loads(aio.dumps(aio.plan_to_dict(plan, 3))), m0, m1)
    assert np.array_equal(back.dense(), plan.dense())
    sup = SupportSet.from_plan(plan)
    again = aio.support_from_dict(json.loads(aio.dumps(aio.support_to_dict(sup))))
    assert np.array_equal(again.sources, sup.sources)
    d = aio.cyclical_to_dict(check_cyclical(sup))
    assert d["certified"] is True


def test_violation_serialization():
    sup = SupportSet(np.array([[0.0], [1.0]]), np.array([[1.0], [0.0]]), Euclidean(1))
    d = aio.cyclical_to_dict(check_cyclical(sup), sup)
    assert d["certified"] is False and d["deficit"] == pytest.approx(2.0)


def test_dumps_is_deterministic_and_nan_safe():
    assert aio.dumps({"b": np.float64(1.5), "a": [np.nan, np.int64(2)]}) == \
        '{\n  "a": [\n    null,\n    2\n  ],\n  "b": 1.5\n}\n'


def _markers(path):
    """Scatter markers drawn in the axes, not counting the legend swatch."""
    root = ET.parse(path).getroot()
    groups = [g for g in root.iter(f"{SVG}g") if g.get("id", "").startswith("PathCollection")]
    legend = [g for g in root.iter(f"{SVG}g") if g.get("id", "").startswith("legend")]
    in_legend = {id(u) for g in legend for u in g.iter(f"{SVG}use")}
    return sum(id(u) not in in_legend for g in groups for u in g.iter(f"{SVG}use"))


def test_single_point_plot(tmp_path):
    path = emit_plot({"one": ([0.5], [0.25])}, "scatter", tmp_path / "one.svg", "t", "x", "y")
    text = path.read_text()
    assert text.lstrip().startswith("<?xml") and "<svg" in text
    assert _markers(path) == 1
    for label in ("one", ">x<", ">y<"):
        assert label in text


def test_line_plot_is_reproducible(tmp_path):
    series = {"delta(C)": ([1.5, 2, 4], [0.0588, 0.0385, 0.0122])}
    a = emit_plot(series, "line", tmp_path / "a.svg")
    b = emit_plot(series, "line", tmp_path / "b.svg")
    assert a.read_bytes() == b.read_bytes()


def test_empty_or_unknown_plots_rejected(tmp_path):
    with pytest.raises(ConfigError, match="empty series"):
        emit_plot({}, "line", tmp_path / "e.svg")
    with pytest.raises(ConfigError, match="empty series"):
        emit_plot({"a": ([], [])}, "scatter", tmp_path / "e.svg")
    with pytest.raises(ConfigError):
        emit_plot({"a": ([1], [1])}, "bar", tmp_path / "e.svg")


def test_measure_from_dict_requires_fields():
    with pytest.raises(MeasureError):
        aio.measure_from_dict({"points": [[0, 0]]})
    assert len(aio.measure_from_dict({"points": [[0, 0]], "weights": [1.0]})) == 1
    assert isinstance(DiscreteMeasure.uniform([[0.0, 1.0]]).space, Euclidean)
