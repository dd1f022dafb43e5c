"""Resistant estimators over finite multisets of reals or planar points.

Every estimator here is a pure function of its input multiset: element
multiplicity counts, order never does, and nothing is mutated. The module
also carries each estimator's metadata (input/output space, known asymptotic
breakdown fractions) in :class:`EstimatorSpec`, which is what the composition
and breakdown layers consume.

Rank convention
---------------
``percentile(q, values)`` returns the element of rank ``ceil(q * n)``
(1-indexed) of the ascending sort, with no interpolation, so the result is
always a member of the sample. The median of an even-sized sample is the
lower of the two middle elements. This convention is applied consistently,
including inside the repeated-median line fit.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import NamedTuple, Sequence

import numpy as np

from .errors import (
    ConvergenceError,
    DegenerateInputError,
    EmptySampleError,
)

__all__ = [
    "AnalyticBreakdown",
    "EstimatorSpec",
    "Kind",
    "LineCoeffs",
    "Point",
    "analytic_breakdown",
    "evaluate",
    "geometric_median",
    "mean",
    "median",
    "percentile",
    "rank_of",
    "reciprocal_median",
    "repeated_median_line",
]

Point = tuple[float, float]

# q * n is not always exact in binary (0.45 * 20 == 9.000000000000002), so
# the product is snapped to the nearest integer before the ceiling is taken.
_RANK_EPS = 1e-9

# An iterate closer than this to a data point is treated as coincident and
# handled with the modified step; the plain update divides by zero there.
_COINCIDENCE_EPS = 1e-12


def _check_sample(values: Sequence[float]) -> list[float]:
    vals = [float(v) for v in values]
    if not vals:
        raise EmptySampleError("sample is empty")
    if not all(math.isfinite(v) for v in vals):
        raise DegenerateInputError("sample contains non-finite values")
    return vals


def rank_of(q: float, n: int) -> int:
    """1-indexed rank selected by the q-th percentile on n elements."""
    if not 0.0 < q < 1.0:
        raise ValueError(f"q must lie strictly inside (0, 1), got {q}")
    return max(1, math.ceil(q * n - _RANK_EPS))


def percentile(q: float, values: Sequence[float]) -> float:
    """Return the q-th percentile of a multiset of reals.

    The result is the element of rank ``ceil(q * n)`` (1-indexed) in the
    ascending sort and is therefore always a member of ``values``.

    Parameters
    ----------
    q : float
        Quantile level, strictly inside (0, 1).
    values : sequence of float
        Nonempty multiset of finite reals.
    """
    vals = _check_sample(values)
    return sorted(vals)[rank_of(q, len(vals)) - 1]


def median(values: Sequence[float]) -> float:
    """Lower median: alias for ``percentile(0.5, values)``."""
    return percentile(0.5, values)


def mean(values: Sequence[float]) -> float:
    """Arithmetic mean of a nonempty multiset of finite reals."""
    vals = _check_sample(values)
    return math.fsum(vals) / len(vals)


def reciprocal_median(values: Sequence[float]) -> float:
    """1 / median(values), with 0 returned when the median is exactly 0."""
    m = median(values)
    return 1.0 / m if m != 0.0 else 0.0


def _check_points(points) -> np.ndarray:
    pts = np.asarray([(float(p[0]), float(p[1])) for p in points], dtype=float)
    if pts.size == 0:
        raise EmptySampleError("point set is empty")
    if not np.isfinite(pts).all():
        raise DegenerateInputError("point set contains non-finite coordinates")
    return pts.reshape(-1, 2)


def distance_sum(points, at: Point) -> float:
    """Sum of Euclidean distances from ``at`` to every point (the objective
    minimised by the geometric median)."""
    pts = _check_points(points)
    return float(np.hypot(pts[:, 0] - at[0], pts[:, 1] - at[1]).sum())


def geometric_median(
    points,
    tol: float = 1e-9,
    max_iter: int = 100_000,
    trace: list | None = None,
) -> Point:
    """Geometric (L1) median of a planar point multiset.

    Runs the classic fixed-point iteration from the coordinate-wise median,
    with the modified step of Vardi and Zhang whenever an iterate lands on a
    data point. Terminates when either the optimality residual
    ``|| sum_i (p_i - y) / ||p_i - y|| ||`` drops to ``tol``, or the iterate
    coincides with a data point whose multiplicity dominates the pull of the
    remaining points (in which case that point is the exact median).

    Parameters
    ----------
    points : sequence of (x, y)
        Nonempty multiset of finite planar points.
    tol : float
        Residual tolerance, > 0.
    max_iter : int
        Iteration budget; exceeding it raises ``ConvergenceError``.
    trace : list, optional
        If given, every iterate is appended (testing hook).

    Returns
    -------
    (x, y) : tuple of float
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    pts = _check_points(points)
    # Canonical order makes the result a true multiset function: float
    # summation depends on operand order, so permuted inputs would otherwise
    # drift at the last ulp.
    pts = pts[np.lexsort((pts[:, 1], pts[:, 0]))]
    scale = float(np.abs(pts).max())

    def eff_tol(inv_dist_sum: float) -> float:
        # Coordinates are only representable to ulp(scale), which floors the
        # reachable residual at roughly eps * scale * sum(1/d); below that
        # the iterate cannot move, so demanding more would never terminate.
        return max(tol, 8.0 * np.finfo(float).eps * scale * inv_dist_sum)

    def optimal_data_point() -> Point | None:
        # Subgradient condition at each data point: the pull of the others
        # must not exceed the candidate's multiplicity. Only consulted when
        # the smooth iteration fails to converge, which happens exactly when
        # it creeps sublinearly toward such a point.
        for i in range(len(pts)):
            diff = pts - pts[i]
            dist = np.hypot(diff[:, 0], diff[:, 1])
            far = dist >= _COINCIDENCE_EPS
            if not far.any():
                return float(pts[i, 0]), float(pts[i, 1])
            pull = (diff[far] / dist[far, None]).sum(axis=0)
            slack = eff_tol(float((1.0 / dist[far]).sum()))
            if float(np.hypot(pull[0], pull[1])) <= int((~far).sum()) + slack:
                return float(pts[i, 0]), float(pts[i, 1])
        return None

    y = np.array([np.median(pts[:, 0]), np.median(pts[:, 1])])
    if trace is not None:
        trace.append((float(y[0]), float(y[1])))
    for it in range(max_iter):
        if it == 512:
            best = optimal_data_point()
            if best is not None:
                return best
        diff = pts - y
        dist = np.hypot(diff[:, 0], diff[:, 1])
        near = dist < _COINCIDENCE_EPS
        if near.any():
            eta = int(near.sum())
            far = ~near
            if not far.any():
                return float(y[0]), float(y[1])
            w = 1.0 / dist[far]
            pull = (diff[far] / dist[far, None]).sum(axis=0)
            pull_norm = float(np.hypot(pull[0], pull[1]))
            if pull_norm <= eta + eff_tol(float(w.sum())):
                # Multiplicity at y dominates: y is the exact median.
                return float(y[0]), float(y[1])
            t_step = (pts[far] * w[:, None]).sum(axis=0) / w.sum()
            lam = eta / pull_norm
            y = (1.0 - lam) * t_step + lam * y
        else:
            w = 1.0 / dist
            resid = (diff * w[:, None]).sum(axis=0)
            if float(np.hypot(resid[0], resid[1])) <= eff_tol(float(w.sum())):
                return float(y[0]), float(y[1])
            y = (pts * w[:, None]).sum(axis=0) / w.sum()
        if trace is not None:
            trace.append((float(y[0]), float(y[1])))
    best = optimal_data_point()
    if best is not None:
        return best
    raise ConvergenceError(
        f"geometric median did not reach residual {tol} in {max_iter} iterations"
    )


class LineCoeffs(NamedTuple):
    """A fitted line y = slope * x + intercept."""

    slope: float
    intercept: float


def _lower_median_array(a: np.ndarray) -> float:
    # rank ceil(n/2), 1-indexed, equals index (n - 1) // 2 of the sort
    s = np.sort(a)
    return float(s[(len(s) - 1) // 2])


def repeated_median_line(points) -> LineCoeffs:
    """Repeated-median (Siegel) line fit.

    The slope is ``median_i ( median_{j != i} (y_j - y_i) / (x_j - x_i) )``
    and the intercept is ``median_i (y_i - slope * x_i)``, all medians taken
    with this module's lower-median convention. Pairs with equal x are
    excluded from the inner medians.

    Raises
    ------
    DegenerateInputError
        Fewer than two points, all x equal, or some point shares its x with
        every other point.
    """
    pts = _check_points(points)
    n = len(pts)
    if n < 2:
        raise DegenerateInputError("line fit needs at least two points")
    xs, ys = pts[:, 0], pts[:, 1]
    if np.all(xs == xs[0]):
        raise DegenerateInputError("all x coordinates are identical")
    inner = np.empty(n)
    with np.errstate(over="ignore"):  # near-equal x may overflow to inf slopes
        for i in range(n):
            dx = xs - xs[i]
            used = dx != 0.0
            used[i] = False
            if not used.any():
                raise DegenerateInputError(
                    f"point {i} shares its x coordinate with every other point"
                )
            inner[i] = _lower_median_array((ys[used] - ys[i]) / dx[used])
        slope = _lower_median_array(inner)
        intercept = _lower_median_array(ys - slope * xs)
    return LineCoeffs(slope, intercept)


class Kind(str, Enum):
    """Atomic estimator kinds understood across the package."""

    MEAN = "mean"
    MEDIAN = "median"
    PERCENTILE = "percentile"
    L1_MEDIAN = "l1median"
    SIEGEL_LINE = "siegel"
    RECIPROCAL_MEDIAN = "recmedian"


_SPACES = {
    Kind.MEAN: ("1d", "1d"),
    Kind.MEDIAN: ("1d", "1d"),
    Kind.PERCENTILE: ("1d", "1d"),
    Kind.RECIPROCAL_MEDIAN: ("1d", "1d"),
    Kind.L1_MEDIAN: ("2d", "2d"),
    Kind.SIEGEL_LINE: ("2d", "line"),
}


@dataclass(frozen=True)
class EstimatorSpec:
    """Declarative description of one atomic estimator.

    ``q`` is required for ``Kind.PERCENTILE`` (strictly inside (0, 1)) and
    must be omitted for every other kind; the median is the fixed alias
    ``percentile(0.5)``.
    """

    kind: Kind
    q: float | None = None

    def __post_init__(self):
        if self.kind is Kind.PERCENTILE:
            if self.q is None or not 0.0 < self.q < 1.0:
                raise ValueError(
                    f"percentile spec needs q strictly inside (0, 1), got {self.q}"
                )
        elif self.q is not None:
            raise ValueError(f"{self.kind.value} spec does not take a q parameter")

    @property
    def input_space(self) -> str:
        return _SPACES[self.kind][0]

    @property
    def output_space(self) -> str:
        return _SPACES[self.kind][1]

    @property
    def effective_q(self) -> float | None:
        """Quantile level for rank-based kinds (0.5 for the median)."""
        if self.kind is Kind.PERCENTILE:
            return self.q
        if self.kind is Kind.MEDIAN:
            return 0.5
        return None

    def label(self) -> str:
        if self.kind is Kind.PERCENTILE:
            return f"percentile({self.q:g})"
        return self.kind.value


def evaluate(spec: EstimatorSpec, sample, *, weiszfeld_tol: float = 1e-9):
    """Apply an atomic estimator described by ``spec`` to ``sample``."""
    if spec.kind is Kind.MEAN:
        return mean(sample)
    if spec.kind is Kind.MEDIAN:
        return median(sample)
    if spec.kind is Kind.PERCENTILE:
        return percentile(spec.q, sample)
    if spec.kind is Kind.RECIPROCAL_MEDIAN:
        return reciprocal_median(sample)
    if spec.kind is Kind.L1_MEDIAN:
        return geometric_median(sample, tol=weiszfeld_tol)
    if spec.kind is Kind.SIEGEL_LINE:
        return repeated_median_line(sample)
    raise ValueError(f"unknown estimator kind {spec.kind!r}")


class AnalyticBreakdown(NamedTuple):
    """Known asymptotic breakdown fractions for an atomic estimator.

    ``fraction`` is the limit of the largest safe contamination share and
    ``onto_fraction`` the limit of the smallest share that can steer the
    estimator to any target; either may be None when unknown.
    """

    fraction: float | None
    onto_fraction: float | None


def analytic_breakdown(spec: EstimatorSpec) -> AnalyticBreakdown:
    """Known asymptotic breakdown fractions by estimator kind.

    The mean collapses under a single far point, so both fractions are 0.
    A percentile at level q resists ``min(q, 1 - q)`` of the data but needs
    ``max(q, 1 - q)`` replaced before it can be steered to arbitrary targets;
    the two coincide only for the median. The median, geometric median and
    repeated-median line all sit at the optimal 0.5. The reciprocated median
    breaks under pure rearrangement of bounded points (fraction 0) and has no
    known onto fraction.
    """
    if spec.kind is Kind.MEAN:
        return AnalyticBreakdown(0.0, 0.0)
    if spec.kind in (Kind.MEDIAN, Kind.PERCENTILE):
        q = spec.effective_q
        return AnalyticBreakdown(min(q, 1.0 - q), max(q, 1.0 - q))
    if spec.kind in (Kind.L1_MEDIAN, Kind.SIEGEL_LINE):
        return AnalyticBreakdown(0.5, 0.5)
    if spec.kind is Kind.RECIPROCAL_MEDIAN:
        return AnalyticBreakdown(0.0, None)
    raise ValueError(f"unknown estimator kind {spec.kind!r}")
