"""roadgen: road scenario reconstruction and generation toolkit.

Reconstructs road centerlines from raster images as cubic B-splines,
generates sinusoidal road variants filtered by signal-temporal-logic
specifications, synthesizes neighborhood-coded tile maps, and streams
scenes to a headless server over a small JSON wire protocol.
"""

from .geometry import (
    CurveMetricParams,
    FitResult,
    Spline2D,
    distance_lp,
    eval_spline,
    fit_spline,
    pointwise_distance_signal,
    spline_from_json,
    spline_to_json,
)
from .signals import SampledSignal, Trace, trace_from_json, trace_to_json
from .stl import Verdict, format_stl, monitor, monitor_bool, monitor_robust, parse_stl

__version__ = "0.1.0"

__all__ = [
    "CurveMetricParams",
    "FitResult",
    "SampledSignal",
    "Spline2D",
    "Trace",
    "Verdict",
    "__version__",
    "distance_lp",
    "eval_spline",
    "fit_spline",
    "format_stl",
    "monitor",
    "monitor_bool",
    "monitor_robust",
    "parse_stl",
    "pointwise_distance_signal",
    "spline_from_json",
    "spline_to_json",
    "trace_from_json",
    "trace_to_json",
]
