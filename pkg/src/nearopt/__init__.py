"""Certified exploration of the near-optimal space of a linear program.

The near-optimal set is bracketed by an inner approximation (hull of
verified near-optimal points) and an outer one (valid halfspaces); the
max-min distance between the two certifies how far either is from the
true set.
"""

__version__ = "0.1.0"

from .errors import (DegenerateHullError, InfeasibleError, InvalidCutError, MembershipError, ModelError,
                     NearOptError, RegionError, SolverError, TimeLimitError, UnboundedError)
from .model import (ExplorationProblem, ExplorationSpec, LinearProgram, generate_toy_model, load_model,
                    load_spec, strip_model, toy_spec)
from .oracle import (ExplorationResult, OracleOptions, furthest_point, optimal_value, run_oracle,
                     setup_exploration)
from .mga import run_mga
from .regions import Halfspace, InnerApprox, OuterApprox, inner_contains, make_inner, outer_contains
from .metrics import (VolumeEstimate, distance_to_reference, maxmin_distance, volume_exact, volume_mc,
                      volume_ratio)
from .sampler import SampleBatch, chebyshev_center, diverse_set, hit_and_run, most_distant_design

__all__ = [
    "DegenerateHullError", "ExplorationProblem", "ExplorationResult", "ExplorationSpec", "Halfspace",
    "InfeasibleError", "InnerApprox", "InvalidCutError", "LinearProgram", "MembershipError", "ModelError",
    "NearOptError", "OracleOptions", "OuterApprox", "RegionError", "SampleBatch", "SolverError",
    "TimeLimitError", "UnboundedError", "VolumeEstimate", "chebyshev_center", "distance_to_reference",
    "diverse_set", "furthest_point", "generate_toy_model", "hit_and_run", "inner_contains", "load_model",
    "load_spec", "make_inner", "maxmin_distance", "most_distant_design", "optimal_value", "outer_contains",
    "run_mga", "run_oracle", "setup_exploration", "strip_model", "toy_spec", "volume_exact", "volume_mc",
    "volume_ratio",
]
