"""Convergence and coverage measurements over inner/outer snapshots."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import numpy as np

from . import kernels
from .errors import RegionError
from .geometry import affine_dim, hull_2d, hull_halfspaces, polygon_area, polytope_volume_3d
from .oracle import ExplorationResult, furthest_point
from .regions import InnerApprox, OuterApprox, inner_at_iteration, outer_at_iteration
from .solver import DEFAULT_SETTINGS, SolverSettings

METRICS_COLUMNS = ("iter", "method", "d_IO", "vol_inner", "vol_outer", "vol_ratio", "d_to_reference")

#: two-sided 95% normal quantile
Z95 = 1.959963984540054


@dataclass(frozen=True)
class VolumeEstimate:
    value: float
    method: str
    ci_halfwidth: float = 0.0
    samples: int = 0
    #: Monte Carlo run with no hits: ``value`` is 0 and the CI is a one-sided bound
    flagged: bool = False

    @property
    def sigma(self) -> float:
        return self.ci_halfwidth / Z95


def maxmin_distance(outer: OuterApprox, inner: InnerApprox, method: str = "milp",
                    settings: SolverSettings = DEFAULT_SETTINGS, **kw) -> tuple[float, np.ndarray]:
    """Max over the outer region of the inf-norm distance to the inner hull."""
    trial = furthest_point(outer, inner, settings=settings, method=method, **kw)
    return trial.d_io, trial.z_trial


def _vertices(region) -> np.ndarray:
    if isinstance(region, InnerApprox):
        return region.points
    if isinstance(region, OuterApprox):
        G, h = region.inequalities()
        if region.n_z not in (2, 3):
            raise ValueError("exact volume supports two or three dimensions")
        return kernels.enumerate_vertices(G, h, 1e-9)
    if isinstance(region, tuple):
        G, h = region
        return kernels.enumerate_vertices(np.asarray(G, float), np.asarray(h, float), 1e-9)
    return np.atleast_2d(np.asarray(region, dtype=float))


def volume_exact(region) -> VolumeEstimate:
    """Exact area/volume in two or three dimensions.

    ``region`` is a point matrix or :class:`InnerApprox` (hull of the
    points), an :class:`OuterApprox`, or a ``(G, h)`` pair; halfspace input
    is converted through vertex enumeration.
    """
    if isinstance(region, tuple):
        G, h = region
        _check_bounded(np.asarray(G, float))
    V = _vertices(region)
    n = V.shape[1] if V.ndim == 2 else 0
    if n not in (2, 3):
        raise ValueError(f"exact volume supports two or three dimensions, got {n}")
    if len(V) <= n:
        return VolumeEstimate(0.0, f"exact-{n}d")
    if n == 2:
        return VolumeEstimate(polygon_area(hull_2d(V)), "exact-2d")
    return VolumeEstimate(float(polytope_volume_3d(V)), "exact-3d")


def _check_bounded(G: np.ndarray) -> None:
    # bounded iff no nonzero direction d has G d <= 0: the normals must
    # positively span the space
    from scipy.optimize import linprog

    n = G.shape[1]
    for j in range(n):
        for s in (1.0, -1.0):
            res = linprog(-s * np.eye(n)[j], A_ub=G, b_ub=np.zeros(len(G)), bounds=[(-1, 1)] * n,
                          method="highs")
            if res.status == 0 and -res.fun > 1e-9:
                raise RegionError("region is unbounded")


def _bounding_box(region) -> tuple[np.ndarray, np.ndarray]:
    if isinstance(region, OuterApprox):
        return np.asarray(region.lower, float), np.asarray(region.upper, float)
    P = region.points
    return P.min(axis=0), P.max(axis=0)


def _membership_mask(region, X: np.ndarray) -> np.ndarray:
    if isinstance(region, OuterApprox):
        G, h = region.inequalities()
        return kernels.points_in_halfspaces(G, h, X, 1e-12)
    if region.m <= region.n_z or affine_dim(region.points) < region.n_z:
        return np.zeros(len(X), dtype=bool)
    G, h = hull_halfspaces(region.points)
    return kernels.points_in_halfspaces(G, h, X, 1e-12)


def _estimate(hits: int, n: int, box_vol: float) -> VolumeEstimate:
    p = hits / n
    if hits == 0:
        # rule of three: one-sided 95% bound on the hit probability
        return VolumeEstimate(0.0, "monte-carlo", box_vol * 3.0 / n, n, flagged=n >= 10_000)
    return VolumeEstimate(box_vol * p, "monte-carlo", box_vol * Z95 * math.sqrt(p * (1 - p) / n), n)


def volume_mc(region, n_samples: int = 100_000, rng: np.random.Generator | int | None = 0,
              box: tuple[np.ndarray, np.ndarray] | None = None) -> VolumeEstimate:
    """Rejection-sampling volume inside the region's bounding box with a 95% binomial CI."""
    if n_samples < 1:
        raise ValueError("n_samples must be positive")
    rng = np.random.default_rng(rng)
    lo, hi = box if box is not None else _bounding_box(region)
    lo, hi = np.asarray(lo, float), np.asarray(hi, float)
    box_vol = float(np.prod(hi - lo))
    if box_vol <= 0:
        return VolumeEstimate(0.0, "monte-carlo", 0.0, n_samples)
    X = lo + rng.random((n_samples, len(lo))) * (hi - lo)
    return _estimate(int(_membership_mask(region, X).sum()), n_samples, box_vol)


def region_volume(region, n_samples: int = 100_000, seed: int = 0) -> VolumeEstimate:
    """Exact where the dimension allows it, Monte Carlo otherwise."""
    n = region.n_z
    if n in (2, 3):
        return volume_exact(region)
    return volume_mc(region, n_samples, seed)


def volume_ratio(inner: InnerApprox, outer: OuterApprox, n_samples: int = 100_000, seed: int = 0) -> float:
    """``vol(inner) / vol(outer)``; Monte Carlo beyond 3-D shares one sample stream."""
    if inner.n_z in (2, 3):
        vo = volume_exact(outer).value
        if vo <= 0:
            raise RegionError("outer region has zero volume")
        return min(1.0, volume_exact(inner).value / vo)
    rng = np.random.default_rng(seed)
    lo, hi = outer.lower, outer.upper
    X = lo + rng.random((n_samples, len(lo))) * (hi - lo)
    in_outer = _membership_mask(outer, X)
    if not in_outer.any():
        raise RegionError("outer region has zero volume (no Monte Carlo hits)")
    in_inner = _membership_mask(inner, X[in_outer])
    return float(in_inner.sum() / in_outer.sum())


def distance_to_reference(inner: InnerApprox, reference_outer: OuterApprox, method: str = "milp",
                          settings: SolverSettings = DEFAULT_SETTINGS, **kw) -> float:
    """Coverage gap of ``inner`` measured against a converged reference outer region."""
    return maxmin_distance(reference_outer, inner, method, settings, **kw)[0]


# ---------------------------------------------------------------------------
# per-iteration tables


@dataclass
class MetricsRow:
    iter: int
    method: str
    d_io: float = float("nan")
    vol_inner: float = float("nan")
    vol_outer: float = float("nan")
    vol_ratio: float = float("nan")
    d_to_reference: float = float("nan")


def metrics_table(method: str, inner: InnerApprox, outer: OuterApprox, last_iter: int,
                  recorded: dict[int, float] | None = None, reference: OuterApprox | None = None,
                  every: int = 1, volumes: bool = True, metric: str = "milp", n_samples: int = 100_000,
                  seed: int = 0, settings: SolverSettings = DEFAULT_SETTINGS, **metric_kw) -> list[MetricsRow]:
    """Metrics at iteration 0, every ``every``-th iteration and ``last_iter``.

    Snapshots are rebuilt from the iteration stamps on points and cuts.
    ``recorded`` maps iterations to already certified ``d_IO`` values.
    """
    recorded = recorded or {}
    its = sorted({0, last_iter} | set(range(every, last_iter + 1, max(1, every))))
    rows = []
    for k in its:
        snap_in = inner_at_iteration(inner, k)
        snap_out = outer_at_iteration(outer, k)
        row = MetricsRow(k, method)
        d = recorded.get(k, float("nan"))
        if not np.isfinite(d):
            d = maxmin_distance(snap_out, snap_in, metric, settings, **metric_kw)[0]
        row.d_io = d
        if volumes:
            try:
                row.vol_inner = region_volume(snap_in, n_samples, seed).value
                row.vol_outer = region_volume(snap_out, n_samples, seed).value
                row.vol_ratio = volume_ratio(snap_in, snap_out, n_samples, seed)
            except (RegionError, ValueError):
                pass
        if reference is not None:
            row.d_to_reference = distance_to_reference(snap_in, reference, metric, settings, **metric_kw)
        rows.append(row)
    return rows


def result_metrics(result: ExplorationResult, **kw) -> list[MetricsRow]:
    """:func:`metrics_table` over a finished run, reusing its certified trace values."""
    last = result.trace[-1].iteration if result.trace else 0
    recorded = {r.iteration: r.d_io for r in result.trace if r.certified and np.isfinite(r.d_io)}
    return metrics_table(result.method, result.inner, result.outer, last, recorded, **kw)


def _fmt(v) -> str:
    if isinstance(v, float):
        return "" if math.isnan(v) else repr(v)
    return str(v)


def write_metrics_csv(path, rows) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(METRICS_COLUMNS)
        for r in rows:
            w.writerow([_fmt(v) for v in (r.iter, r.method, r.d_io, r.vol_inner, r.vol_outer,
                                          r.vol_ratio, r.d_to_reference)])
