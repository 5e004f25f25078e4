"""Reading and writing measures, plans, supports and results.

Floats are written with ``repr`` (shortest round-trip form) so a write/read
cycle reproduces every value bit for bit.
"""

from __future__ import annotations

import csv
import io as _io
import json
import math
from pathlib import Path

import numpy as np

from .errors import MeasureError
from .measures import DiscreteMeasure
from .monotonicity import CycleViolation, CyclicalCertificate, SupportSet, WitnessResult
from .solver import TransportPlan
from .spaces import GeodesicSpace, space_from_spec


def _plain(obj):
    if isinstance(obj, np.ndarray):
        return [_plain(x) for x in obj.tolist()]
    if isinstance(obj, (np.floating,)):
        return float(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, float) and not math.isfinite(obj):
        return None
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(x) for x in obj]
    return obj


def dumps(obj) -> str:
    """Deterministic JSON: sorted keys, fixed indentation, NaN/inf as null."""
    return json.dumps(_plain(obj), indent=2, sort_keys=True, allow_nan=False) + "\n"


# -- measures -----------------------------------------------------------------

def measure_to_dict(m: DiscreteMeasure) -> dict:
    return {"points": m.points, "weights": m.weights, "space": m.space.to_spec()}


def measure_to_json(m: DiscreteMeasure) -> str:
    return dumps(measure_to_dict(m))


def measure_from_dict(d: dict, space: GeodesicSpace | None = None) -> DiscreteMeasure:
    if not isinstance(d, dict) or "points" not in d or "weights" not in d:
        raise MeasureError("measure JSON needs 'points' and 'weights'", code="parse_error")
    if space is None and d.get("space"):
        space = space_from_spec(d["space"])
    pts = d["points"]
    try:
        points = np.array(pts, dtype=float)
        weights = np.array(d["weights"], dtype=float)
    except (TypeError, ValueError) as exc:
        raise MeasureError(f"bad numeric data: {exc}", code="parse_error") from exc
    if points.ndim != 2:
        raise MeasureError("points must be a list of coordinate lists", code="dimension_mismatch")
    return DiscreteMeasure(points, weights, space)


def measure_from_json(text: str, space: GeodesicSpace | None = None) -> DiscreteMeasure:
    try:
        d = json.loads(text)
    except json.JSONDecodeError as exc:
        raise MeasureError(f"invalid JSON: {exc}", code="parse_error") from exc
    return measure_from_dict(d, space)


def measure_to_csv(m: DiscreteMeasure) -> str:
    buf = _io.StringIO()
    dim = m.points.shape[1]
    buf.write(",".join([f"x{i}" for i in range(dim)] + ["weight"]) + "\n")
    for p, w in zip(m.points, m.weights):
        buf.write(",".join(repr(float(v)) for v in (*p, w)) + "\n")
    return buf.getvalue()


def measure_from_csv(text: str, space: GeodesicSpace | None = None) -> DiscreteMeasure:
    rows = [r for r in csv.reader(_io.StringIO(text)) if r and any(c.strip() for c in r)]
    if rows:
        try:
            [float(c) for c in rows[0]]
        except ValueError:
            rows = rows[1:]  # header
    if not rows:
        raise MeasureError("CSV holds no atoms", code="empty")
    width = len(rows[0])
    if width < 2 or any(len(r) != width for r in rows):
        raise MeasureError("CSV rows must all have the same number (>= 2) of columns",
                           code="dimension_mismatch")
    try:
        data = np.array([[float(c) for c in r] for r in rows])
    except ValueError as exc:
        raise MeasureError(f"non-numeric CSV field: {exc}", code="parse_error") from exc
    return DiscreteMeasure(data[:, :-1], data[:, -1], space)


def ingest_measure(path, fmt: str | None = None, space: GeodesicSpace | None = None) -> DiscreteMeasure:
    """Read and validate a measure from a CSV or JSON file."""
    path = Path(path)
    fmt = (fmt or path.suffix.lstrip(".")).lower()
    try:
        text = path.read_text()
    except OSError as exc:
        raise MeasureError(f"cannot read {path}: {exc}", code="unreadable") from exc
    if fmt == "csv":
        return measure_from_csv(text, space)
    if fmt == "json":
        return measure_from_json(text, space)
    raise MeasureError(f"unknown measure format {fmt!r}", code="unknown_format")


def write_measure(m: DiscreteMeasure, path, fmt: str | None = None):
    path = Path(path)
    fmt = (fmt or path.suffix.lstrip(".")).lower()
    path.write_text(measure_to_csv(m) if fmt == "csv" else measure_to_json(m))


# -- plans, supports, results ------------------------------------------------

def plan_to_dict(plan: TransportPlan, seed=None) -> dict:
    return {
        "shape": list(plan.shape),
        "entries": [[int(i), int(j), float(w)] for i, j, w in zip(plan.rows, plan.cols, plan.mass)],
        "cost": plan.cost,
        "solver": {**plan.meta, "seed": seed},
    }


def plan_from_dict(d: dict, source=None, target=None) -> TransportPlan:
    entries = d["entries"]
    rows = np.array([e[0] for e in entries], dtype=int)
    cols = np.array([e[1] for e in entries], dtype=int)
    mass = np.array([e[2] for e in entries], dtype=float)
    return TransportPlan(tuple(d["shape"]), rows, cols, mass, source, target, d.get("cost"),
                         dict(d.get("solver", {})))


def support_to_dict(s: SupportSet) -> dict:
    return {"sources": s.sources, "targets": s.targets, "space": s.space.to_spec()}


def support_from_dict(d: dict) -> SupportSet:
    space = space_from_spec(d.get("space", {"type": "euclidean",
                                           "dimension": len(d["sources"][0])}))
    return SupportSet(np.array(d["sources"], float), np.array(d["targets"], float), space)


def cyclical_to_dict(result, support: SupportSet | None = None) -> dict:
    if isinstance(result, CyclicalCertificate):
        return {"certified": True, "n_pairs": result.n_pairs,
                "min_cycle_mean": result.min_cycle_mean}
    assert isinstance(result, CycleViolation)
    out = {"certified": False, "indices": result.indices, "original_sum": result.original,
           "permuted_sum": result.permuted, "deficit": result.deficit,
           "min_cycle_mean": result.min_cycle_mean}
    if support is not None:
        out["sources"] = support.sources[result.indices]
        out["targets"] = support.targets[result.indices]
    return out


def witness_to_dict(w: WitnessResult) -> dict:
    return {
        "found": w.found,
        "reason": w.reason,
        "parameters": w.params.to_dict() if w.params else None,
        "rows": list(w.rows),
        "targets": list(w.targets),
        "points": w.points,
        "t": w.t,
        "swapped_sum": w.swapped_sum,
        "original_sum": w.original_sum,
        "deficit": w.deficit,
        "opening": w.opening,
        "widenings": w.widenings,
        "cone_radius": w.cone_radius,
    }
