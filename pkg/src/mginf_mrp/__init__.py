"""Markov renewal approximation of the M/G/inf queue, with bounds and a simulator."""

from .bounds import (
    basic_bounds,
    cdf_bounds,
    class_bounds,
    cycle_bounds,
    error_report,
    goodness_threshold,
    regime_bound,
    visit_bounds,
)
from .dist import ServiceDistribution, parse_spec
from .errors import DegenerateRatioError, NumericalFailure
from .exact import exact_anchors
from .renewal import (
    QueueConfig,
    entries_mean,
    recurrence_mean,
    sojourn_cdf,
    sojourn_mean,
    sojourn_means,
)
from .sim import SimConfig, SimReport, merge, run

__version__ = "0.1.0"

__all__ = [
    "QueueConfig",
    "ServiceDistribution",
    "SimConfig",
    "SimReport",
    "NumericalFailure",
    "DegenerateRatioError",
    "parse_spec",
    "sojourn_mean",
    "sojourn_means",
    "sojourn_cdf",
    "recurrence_mean",
    "entries_mean",
    "basic_bounds",
    "regime_bound",
    "class_bounds",
    "cycle_bounds",
    "visit_bounds",
    "cdf_bounds",
    "error_report",
    "goodness_threshold",
    "exact_anchors",
    "run",
    "merge",
]
