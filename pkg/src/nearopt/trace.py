"""Per-iteration records and the trace CSV shared by ORACLE and the MGA runs."""

from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np

TRACE_COLUMNS = ("iter", "method", "d_IO", "bound", "trial_feasible", "cuts_added", "inner_m",
                 "outer_k", "t_step2_ms", "t_step3_ms", "t_step4_ms", "cum_ms")
TIMING_COLUMNS = ("t_step2_ms", "t_step3_ms", "t_step4_ms", "cum_ms")


@dataclass
class IterationRecord:
    iteration: int
    method: str
    d_io: float = float("nan")
    bound: float = float("nan")
    trial_feasible: bool | None = None
    cuts_added: int = 0
    inner_m: int = 0
    outer_k: int = 0
    step_times_ms: dict = field(default_factory=dict)
    cum_ms: float = 0.0
    certified: bool = True
    z_trial: np.ndarray | None = None
    z_feasible: np.ndarray | None = None
    weight: np.ndarray | None = None
    degenerate: bool = False


@dataclass
class CutRecord:
    """A cut accepted into the outer approximation and the points that produced it."""

    iteration: int
    normal: np.ndarray
    offset: float
    provenance: str
    z_trial: np.ndarray | None = None
    z_feasible: np.ndarray | None = None

    @property
    def margin(self) -> float:
        """``normal'z_trial - offset``; positive for a strictly separating cut."""
        if self.z_trial is None:
            return float("nan")
        return float(self.normal @ self.z_trial - self.offset)


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, bool):
        return "1" if v else "0"
    if isinstance(v, (float, np.floating)):
        return "" if np.isnan(v) else repr(float(v) + 0.0)
    return str(v)


def trace_rows(records, timings: bool = True):
    for r in records:
        t = r.step_times_ms
        row = [r.iteration, r.method, r.d_io, r.bound, r.trial_feasible, r.cuts_added, r.inner_m, r.outer_k,
               t.get("step2"), t.get("step3"), t.get("step4"), r.cum_ms]
        if not timings:
            row[8:] = [0.0, 0.0, 0.0, 0.0]
        yield [_fmt(v) for v in row]


def write_trace_csv(path, records, timings: bool = True) -> None:
    """Write the trace; ``timings=False`` zeroes the wall-clock columns."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(TRACE_COLUMNS)
        w.writerows(trace_rows(records, timings))
