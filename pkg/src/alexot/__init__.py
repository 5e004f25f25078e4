"""Optimal transport with quadratic cost on geodesic spaces with a lower
curvature bound: exact discrete solving, cyclical monotonicity certificates,
comparison geometry, distance charts and a witness search for split plans."""

__version__ = "0.1.0"

from .charts import Chart, chart_eval, distortion, geodesic_direction  # noqa: E402
from .errors import ChartError, ConfigError, GeometryError, MeasureError, SolverError  # noqa: E402
from .measures import DiscreteMeasure, sample_diffuse, sample_on_curve  # noqa: E402
from .model import comparison_angle, comparison_point_distance, side_from_angle  # noqa: E402
from .monotonicity import (SupportSet, check_cyclical, delta_of_C, restrict,  # noqa: E402
                           witness_search)
from .solver import TransportPlan, detect_map, solve, uniqueness_probe  # noqa: E402
from .spaces import Euclidean, MetricCone, Sphere, alexandrov_check, space_from_spec  # noqa: E402

__all__ = [
    "Chart", "ChartError", "ConfigError", "DiscreteMeasure", "Euclidean", "GeometryError",
    "MeasureError", "MetricCone", "SolverError", "Sphere", "SupportSet", "TransportPlan",
    "alexandrov_check", "chart_eval", "check_cyclical", "comparison_angle",
    "comparison_point_distance", "delta_of_C", "detect_map", "distortion", "geodesic_direction",
    "restrict", "sample_diffuse", "sample_on_curve", "side_from_angle", "solve", "space_from_spec",
    "uniqueness_probe", "witness_search",
]
