"""Empirical breakdown measurement under explicit adversarial contamination.

Measurement model
-----------------
The adversary replaces ``m`` points and we watch how far the estimate moves
as the replacement magnitude climbs a ladder (default 1e3 .. 1e12). A
contamination size ``m`` *breaks* the estimator when some strategy makes the
deviation either

* exceed half the magnitude at the two largest rungs (rank-type breakage:
  the output jumps to where the contamination sits), or
* keep scaling at least linearly from rung to rung while clearing a
  ``magnitude / (4 * size)`` floor at the top rung (dilution-type breakage:
  the mean moves by roughly ``m * magnitude / size``, which tracks the rung
  but never reaches half of it).

Bounded estimators plateau at the clean data's scale and match neither
clause. The measured breakdown count is the largest ``m`` that no strategy
breaks; the witness records the first breaking strategy in name order.

Strategies are the cross product of sign (all-positive / all-negative) and
placement. Placements: ``concentrated`` fills groups one after another at a
per-group quota (every quota up to the group size is tried, since the worst
case fills each group with just enough to flip it); ``spread`` distributes
evenly across groups; ``collapse`` additionally moves every untouched point
to ``sign / magnitude``, next to zero but still within any bounded
neighbourhood of the data. Collapse is what exposes estimators such as the
reciprocated median that blow up under pure rearrangement of bounded points.
For flat data the two far placements coincide and are run once as
``extremes``.

Onto measurement (the smallest ``m`` that can steer the estimate to *any*
target) is constructive per estimator kind: rank estimators place ``m``
copies of the target and remove sacrificial points chosen by rank
arithmetic, the mean balances with one compensating point, line fits place
collinear points, and the geometric median falls back to the gradient
solver from the manipulation module as a reachability oracle.
"""

from __future__ import annotations

import math
from bisect import bisect_left
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .composition import CompositeSpec, HierarchicalDataset, evaluate_composite
from .errors import ConfigError, ConvergenceError, EstimatorError
from .estimators import (
    EstimatorSpec,
    Kind,
    LineCoeffs,
    analytic_breakdown,
    evaluate,
    geometric_median,
    rank_of,
)

__all__ = [
    "BoundCheck",
    "BreakdownReport",
    "BreakdownResult",
    "ContaminationModel",
    "OntoResult",
    "Witness",
    "check_bounds",
    "check_unequal_bound",
    "composite_fraction",
    "contaminate",
    "default_targets",
    "measure_breakdown",
    "measure_breakdown_unequal",
    "measure_onto",
    "measure_report",
]

_SIGNS = {"positive": 1.0, "negative": -1.0}
_PLACEMENTS = ("concentrated", "spread", "collapse")


@dataclass(frozen=True)
class ContaminationModel:
    """Configuration of the adversarial search.

    ``far_radius`` is the distance beyond which a point counts as far from
    the clean data; every ladder rung must exceed it. ``ladder`` must be
    strictly increasing with at least two rungs. ``signs`` and
    ``placements`` select which strategy families run.
    """

    far_radius: float = 100.0
    ladder: tuple[float, ...] = (1e3, 1e6, 1e9, 1e12)
    signs: tuple[str, ...] = ("positive", "negative")
    placements: tuple[str, ...] = _PLACEMENTS

    def __post_init__(self):
        if self.far_radius <= 0:
            raise ConfigError("far_radius must be positive")
        if len(self.ladder) < 2:
            raise ConfigError("magnitude ladder needs at least two rungs")
        if any(b <= a for a, b in zip(self.ladder, self.ladder[1:])):
            raise ConfigError("magnitude ladder must be strictly increasing")
        if self.ladder[0] <= self.far_radius:
            raise ConfigError("every ladder rung must exceed far_radius")
        if not self.signs or any(s not in _SIGNS for s in self.signs):
            raise ConfigError(f"signs must be a nonempty subset of {sorted(_SIGNS)}")
        if not self.placements or any(p not in _PLACEMENTS for p in self.placements):
            raise ConfigError(
                f"placements must be a nonempty subset of {_PLACEMENTS}"
            )


@dataclass(frozen=True)
class Witness:
    """The contamination that first broke the estimator."""

    count: int
    strategy: str
    magnitude: float
    deviation: float


@dataclass(frozen=True)
class BreakdownResult:
    """Measured breakdown count: the largest m that no strategy breaks."""

    count: int
    witness: Witness | None


@dataclass(frozen=True)
class OntoResult:
    """Measured onto count: the smallest m reaching every target."""

    count: int
    achieved_at: tuple[tuple[object, int], ...]
    failures: tuple[str, ...] = ()


@dataclass(frozen=True)
class BoundCheck:
    name: str
    lhs: float
    rhs: float
    holds: bool


@dataclass(frozen=True)
class BreakdownReport:
    """Measured and analytic breakdown data for one estimator on one dataset."""

    estimator: str
    size: int
    breakdown_count: int
    onto_count: int | None = None
    analytic_fraction: float | None = None
    analytic_onto_fraction: float | None = None
    witness: Witness | None = None
    checks: tuple[BoundCheck, ...] = ()

    def __post_init__(self):
        if self.onto_count is not None:
            if not 0 <= self.breakdown_count < self.onto_count <= self.size:
                raise ValueError(
                    "expected 0 <= breakdown count < onto count <= size, got "
                    f"{self.breakdown_count} / {self.onto_count} / {self.size}"
                )


# ---------------------------------------------------------------------------
# strategies


@dataclass(frozen=True)
class _Strategy:
    name: str
    sign: float
    placement: str
    quota: tuple[int, ...] | None = None


def _strategies(model: ContaminationModel, data: HierarchicalDataset) -> list[_Strategy]:
    out = []
    grouped = data.depth >= 2
    for sign_name in model.signs:
        sign = _SIGNS[sign_name]
        far_wanted = ("concentrated" in model.placements) or (
            "spread" in model.placements
        )
        if not grouped:
            if far_wanted:
                out.append(_Strategy(f"{sign_name}-extremes", sign, "spread"))
        else:
            if "concentrated" in model.placements:
                k = data.group_size
                if data.depth == 2:
                    for t in range(1, k + 1):
                        out.append(
                            _Strategy(
                                f"{sign_name}-concentrated-t{t:03d}",
                                sign,
                                "concentrated",
                                (t,),
                            )
                        )
                else:
                    n = data.group_count
                    for t in range(1, k + 1):
                        for u in range(1, n + 1):
                            out.append(
                                _Strategy(
                                    f"{sign_name}-concentrated-t{t:03d}-u{u:03d}",
                                    sign,
                                    "concentrated",
                                    (t, u),
                                )
                            )
            if "spread" in model.placements:
                out.append(_Strategy(f"{sign_name}-spread", sign, "spread"))
        if "collapse" in model.placements:
            out.append(_Strategy(f"{sign_name}-collapse", sign, "collapse"))
    return sorted(out, key=lambda s: s.name)


def _far_paths(strategy: _Strategy, data: HierarchicalDataset) -> list[tuple]:
    """Replacement order: the first m paths receive the far payload."""
    paths = data.paths()
    if strategy.placement == "concentrated" and data.depth == 2:
        (t,) = strategy.quota
        first = [p for p in paths if p[1] < t]
        rest = [p for p in paths if p[1] >= t]
        return first + rest
    if strategy.placement == "concentrated" and data.depth == 3:
        t, u = strategy.quota
        first = [p for p in paths if p[1] < u and p[2] < t]
        rest = [p for p in paths if not (p[1] < u and p[2] < t)]
        return first + rest
    if strategy.placement == "spread" and data.depth >= 2:
        return sorted(paths, key=lambda p: (p[-1],) + p[:-1])
    return paths


def _far_payload(data, path, sign: float, magnitude: float):
    if data.kind == "scalar":
        return sign * magnitude
    # Keep the original x so line fits stay non-degenerate, and stagger the
    # far y per group so broken group summaries are not collinear-by-value.
    if data.depth == 3:
        stagger = (path[0] * data.group_count + path[1]) / (
            2.0 * data.outer_count * data.group_count
        )
    elif data.depth == 2:
        stagger = path[0] / (2.0 * data.group_count)
    else:
        stagger = path[1] / (2.0 * data.total_points)
    x, _ = data.get(path)
    return (x, sign * magnitude * (1.0 + stagger))


def _near_payload(data, path, sign: float, magnitude: float):
    if data.kind == "scalar":
        return sign / magnitude
    x, _ = data.get(path)
    return (x, sign / magnitude)


def _apply_strategy(
    strategy: _Strategy, data: HierarchicalDataset, m: int, magnitude: float
) -> HierarchicalDataset:
    order = _far_paths(strategy, data)
    updates = {}
    if strategy.placement == "collapse":
        for path in order:
            updates[path] = _near_payload(data, path, strategy.sign, magnitude)
    for path in order[:m]:
        updates[path] = _far_payload(data, path, strategy.sign, magnitude)
    return data.replace(updates)


def contaminate(
    data: HierarchicalDataset,
    strategy_name: str,
    count: int,
    magnitude: float,
    model: ContaminationModel | None = None,
) -> HierarchicalDataset:
    """Reproduce a contamination by strategy name (witness replay)."""
    model = model or ContaminationModel()
    for strat in _strategies(model, data):
        if strat.name == strategy_name:
            return _apply_strategy(strat, data, count, magnitude)
    raise ConfigError(f"unknown strategy {strategy_name!r} for this dataset")


# ---------------------------------------------------------------------------
# deviation bookkeeping


def _eval_any(spec, data: HierarchicalDataset, weiszfeld_tol: float):
    if isinstance(spec, CompositeSpec):
        return evaluate_composite(spec, data, weiszfeld_tol=weiszfeld_tol)
    if data.depth != 1:
        raise ConfigError("atomic estimators measure on depth-1 datasets")
    return evaluate(spec, data.groups[0], weiszfeld_tol=weiszfeld_tol)


def _distance(a, b) -> float:
    if isinstance(a, LineCoeffs) or isinstance(b, LineCoeffs):
        return math.hypot(a[0] - b[0], a[1] - b[1])
    if isinstance(a, tuple):
        return math.hypot(a[0] - b[0], a[1] - b[1])
    return abs(a - b)


def _breaks(devs: Sequence[float], ladder: Sequence[float], size: int) -> bool:
    if devs[-1] >= 0.5 * ladder[-1] and devs[-2] >= 0.5 * ladder[-2]:
        return True
    if devs[-1] <= 0 or devs[-1] < 0.25 * ladder[-1] / size:
        return False
    return all(
        devs[j + 1] >= 0.5 * devs[j] * (ladder[j + 1] / ladder[j])
        for j in range(len(devs) - 1)
    )


def _deviation_series(
    spec, data, clean, strategy, m, model, weiszfeld_tol
) -> list[float] | None:
    """Deviations over the ladder, or None when the strategy cannot break.

    The top rung is probed first: if its deviation clears neither the strong
    threshold nor the linear-growth floor, no clause can fire and the
    remaining rungs are skipped.
    """
    size = data.total_points
    top = model.ladder[-1]

    def dev_at(magnitude: float) -> float | None:
        try:
            value = _eval_any(
                spec, _apply_strategy(strategy, data, m, magnitude), weiszfeld_tol
            )
        except (EstimatorError, ConvergenceError):
            return None
        return _distance(value, clean)

    top_dev = dev_at(top)
    if top_dev is None or top_dev < min(0.5 * top, 0.25 * top / size):
        return None
    devs = []
    for rung in model.ladder[:-1]:
        d = dev_at(rung)
        if d is None:
            return None
        devs.append(d)
    devs.append(top_dev)
    return devs


def measure_breakdown(
    spec,
    data: HierarchicalDataset,
    model: ContaminationModel | None = None,
    *,
    weiszfeld_tol: float = 1e-9,
) -> BreakdownResult:
    """Largest contamination count that no strategy in the model breaks.

    Walks m upward and returns ``first breaking m - 1`` (0 when even pure
    rearrangement of bounded points breaks the estimator, as the reciprocated
    median does). The witness is the first breaking strategy in name order,
    so reruns are deterministic.
    """
    model = model or ContaminationModel()
    clean = _eval_any(spec, data, weiszfeld_tol)
    strategies = _strategies(model, data)
    size = data.total_points
    for m in range(size + 1):
        for strat in strategies:
            devs = _deviation_series(spec, data, clean, strat, m, model, weiszfeld_tol)
            if devs is not None and _breaks(devs, model.ladder, size):
                return BreakdownResult(
                    max(0, m - 1),
                    Witness(m, strat.name, model.ladder[-1], devs[-1]),
                )
    return BreakdownResult(size, None)


def measure_breakdown_unequal(
    spec: CompositeSpec,
    groups: Sequence[Sequence[float]],
    model: ContaminationModel | None = None,
) -> BreakdownResult:
    """Breakdown count of a depth-2 scalar composite over unequal groups.

    Same strategy families as the equal-size search, with per-group quotas
    capped at each group's own size. Exists so the unequal-size lower bound
    can be checked against a measured count rather than a constructed one.
    """
    from .composition import evaluate_unequal

    model = model or ContaminationModel()
    if spec.depth != 2 or spec.input_space != "1d":
        raise ConfigError("unequal measurement covers depth-2 scalar composites")
    gs = [list(g) for g in groups]
    sizes = [len(g) for g in gs]
    total = sum(sizes)
    clean = evaluate_unequal(spec, gs)

    def order_for(strategy: _Strategy) -> list[tuple[int, int]]:
        paths = [(i, j) for i, g in enumerate(gs) for j in range(len(g))]
        if strategy.placement == "concentrated":
            (t,) = strategy.quota
            first = [p for p in paths if p[1] < t]
            return first + [p for p in paths if p[1] >= t]
        if strategy.placement == "spread":
            return sorted(paths, key=lambda p: (p[1], p[0]))
        return paths

    def apply(strategy: _Strategy, m: int, magnitude: float):
        new = [list(g) for g in gs]
        order = order_for(strategy)
        if strategy.placement == "collapse":
            for i, j in order:
                new[i][j] = strategy.sign / magnitude
        for i, j in order[:m]:
            new[i][j] = strategy.sign * magnitude
        return new

    max_quota = max(sizes)
    strategies = []
    for sign_name in model.signs:
        sign = _SIGNS[sign_name]
        if "concentrated" in model.placements:
            for t in range(1, max_quota + 1):
                strategies.append(
                    _Strategy(
                        f"{sign_name}-concentrated-t{t:03d}", sign, "concentrated", (t,)
                    )
                )
        if "spread" in model.placements:
            strategies.append(_Strategy(f"{sign_name}-spread", sign, "spread"))
        if "collapse" in model.placements:
            strategies.append(_Strategy(f"{sign_name}-collapse", sign, "collapse"))
    strategies.sort(key=lambda s: s.name)

    for m in range(total + 1):
        for strat in strategies:
            devs = []
            broken = True
            for rung in model.ladder:
                try:
                    value = evaluate_unequal(spec, apply(strat, m, rung))
                except EstimatorError:
                    broken = False
                    break
                devs.append(_distance(value, clean))
            if broken and devs and _breaks(devs, model.ladder, total):
                return BreakdownResult(
                    max(0, m - 1),
                    Witness(m, strat.name, model.ladder[-1], devs[-1]),
                )
    return BreakdownResult(total, None)


# ---------------------------------------------------------------------------
# onto measurement


def default_targets(spec, data: HierarchicalDataset, model: ContaminationModel):
    """Targets spanning both tails of the ladder plus two interior values."""
    top = model.ladder[-1]
    clean = _eval_any(spec, data, 1e-9)
    out_space = spec.output_space
    if out_space == "1d":
        return [-top, top, 0.0, clean + 1.0]
    if out_space == "2d":
        return [(-top, -top), (top, top), (0.0, 0.0), (clean[0] + 1.0, clean[1] + 1.0)]
    return [
        LineCoeffs(-top, -top),
        LineCoeffs(top, top),
        LineCoeffs(0.0, 0.0),
        LineCoeffs(clean.slope + 1.0, clean.intercept + 1.0),
    ]


def _validate_targets(targets, model: ContaminationModel):
    comps = [
        c
        for t in targets
        for c in (t if isinstance(t, (tuple, LineCoeffs)) else (t,))
    ]
    top = model.ladder[-1]
    if not comps or max(comps) < top or min(comps) > -top:
        raise ConfigError("targets must reach beyond both ends of the ladder")
    magnitudes = [
        max(abs(c) for c in (t if isinstance(t, (tuple, LineCoeffs)) else (t,)))
        for t in targets
    ]
    if min(magnitudes) > model.ladder[0]:
        raise ConfigError("targets must include interior values")


def _reach_tol(target) -> float:
    comps = target if isinstance(target, (tuple, LineCoeffs)) else (target,)
    return 1e-6 * max(1.0, *(abs(c) for c in comps))


def _rank_insertable(sorted_vals: list[float], r: int, y: float, m: int) -> int | None:
    """Removals-from-below count making rank r land on y after inserting m
    copies, or None when infeasible."""
    n = len(sorted_vals)
    below = bisect_left(sorted_vals, y)
    a_lo = max(0, below - r + 1, m - (n - below))
    a_hi = min(m, below, below + m - r)
    return a_lo if a_lo <= a_hi else None


def _reach_rank(values: Sequence[float], q: float, y: float, m: int) -> list[float] | None:
    xs = sorted(values)
    n = len(xs)
    r = rank_of(q, n)
    a = _rank_insertable(xs, r, y, m)
    if a is None:
        return None
    kept = xs[a : n - (m - a)] if m - a > 0 else xs[a:]
    return kept + [y] * m


def _reach_atomic(spec: EstimatorSpec, values, m: int, y, weiszfeld_tol: float):
    """A modified multiset of the same size with E = y using <= m changes,
    or None when the constructive placements cannot reach y."""
    if spec.kind in (Kind.MEDIAN, Kind.PERCENTILE):
        return _reach_rank(values, spec.effective_q, y, m)
    if spec.kind is Kind.MEAN:
        if m == 0:
            return list(values)
        kept = list(values)[m:]
        filler = [y] * (m - 1)
        balance = y * len(values) - math.fsum(kept) - math.fsum(filler)
        if not math.isfinite(balance):
            return None
        return kept + filler + [balance]
    if spec.kind is Kind.RECIPROCAL_MEDIAN:
        v = 1.0 / y if y != 0.0 else 0.0
        return _reach_rank(values, 0.5, v, m)
    if spec.kind is Kind.L1_MEDIAN:
        return _reach_l1(values, m, y, weiszfeld_tol)
    if spec.kind is Kind.SIEGEL_LINE:
        pts = list(values)
        x_hi = max(p[0] for p in pts)
        moved = [
            (x_hi + 1.0 + j, y.slope * (x_hi + 1.0 + j) + y.intercept)
            for j in range(m)
        ]
        return pts[m:] + moved
    raise ConfigError(f"onto measurement unsupported for {spec.kind.value}")


def _reach_l1(points, m: int, y, weiszfeld_tol: float):
    pts = list(points)
    if m == 0:
        return pts
    pinned = [tuple(y)] * m + pts[m:]
    med = geometric_median(pinned, tol=weiszfeld_tol)
    if _distance(med, tuple(y)) <= _reach_tol(tuple(y)):
        return pinned
    # Not pinned by multiplicity. m free unit vectors can cancel at most
    # norm m of fixed pull, so anything beyond that is flatly unreachable
    # and the solver need not grind on it.
    fixed = np.asarray(pts[m:], dtype=float)
    dx = fixed[:, 0] - y[0]
    dy = fixed[:, 1] - y[1]
    dist = np.hypot(dx, dy)
    away = dist > 1e-12  # fixed points sitting on y relax the condition
    inv = 1.0 / dist[away]
    pull = math.hypot(
        float((dx[away] * inv).sum()), float((dy[away] * inv).sum())
    )
    if pull > m + int((~away).sum()) - 1e-9:
        return None
    from .manipulate import solve_group

    try:
        solved, _, _ = solve_group(pts, tuple(y), m, max_iter=20_000)
    except (ConvergenceError, EstimatorError):
        return None
    return solved


def _reach_composite(spec: CompositeSpec, data: HierarchicalDataset, m: int, y):
    """Quota-style construction for scalar rank stacks at depth 2."""
    if data.depth != 2 or data.kind != "scalar":
        raise ConfigError(
            "onto measurement for composites supports depth-2 scalar stacks"
        )
    if any(
        lv.kind not in (Kind.MEDIAN, Kind.PERCENTILE, Kind.MEAN)
        for lv in spec.levels
    ):
        raise ConfigError("onto measurement for composites needs rank or mean levels")
    k = data.group_size
    for t in range(1, k + 1):
        full, extra = divmod(m, t)
        if full > data.group_count or (full == data.group_count and extra):
            continue
        updates = {}
        for i in range(full):
            for j in range(t):
                updates[(i, j)] = y
        for j in range(extra):
            updates[(full, j)] = y
        yield data.replace(updates)


def measure_onto(
    spec,
    data: HierarchicalDataset,
    model: ContaminationModel | None = None,
    targets: Sequence | None = None,
    *,
    weiszfeld_tol: float = 1e-9,
) -> OntoResult:
    """Smallest m such that every target is reachable by changing m points.

    Reachability is verified by re-evaluating the constructed multiset and
    comparing against the target at relative tolerance 1e-6 (exact for rank
    estimators, which place copies of the target itself). Solver failures
    for geometric-median targets are collected per target rather than
    aborting the measurement.
    """
    model = model or ContaminationModel()
    if not isinstance(spec, CompositeSpec) and data.depth != 1:
        raise ConfigError("atomic estimators measure on depth-1 datasets")
    if targets is None:
        targets = default_targets(spec, data, model)
    _validate_targets(targets, model)
    size = data.total_points
    achieved: dict[int, int] = {}
    failures: list[str] = []
    for m in range(size + 1):
        for ti, y in enumerate(targets):
            if ti in achieved:
                continue
            try:
                if isinstance(spec, CompositeSpec):
                    candidates = _reach_composite(spec, data, m, y)
                    reached = any(
                        _distance(
                            evaluate_composite(spec, c, weiszfeld_tol=weiszfeld_tol), y
                        )
                        <= _reach_tol(y)
                        for c in candidates
                    )
                else:
                    modified = _reach_atomic(
                        spec, data.groups[0], m, y, weiszfeld_tol
                    )
                    reached = modified is not None and _distance(
                        evaluate(spec, modified, weiszfeld_tol=weiszfeld_tol), y
                    ) <= _reach_tol(y)
            except ConvergenceError as exc:
                failures.append(f"target {y!r} at m={m}: {exc}")
                reached = False
            if reached:
                achieved[ti] = m
        if len(achieved) == len(targets):
            return OntoResult(
                m,
                tuple((targets[ti], achieved[ti]) for ti in sorted(achieved)),
                tuple(failures),
            )
    raise ConvergenceError(
        "some targets were unreachable even with every point replaced: "
        + "; ".join(failures[-3:] or ["no constructive placement found"])
    )


# ---------------------------------------------------------------------------
# analytic composite fractions and inequality checks


@dataclass(frozen=True)
class CompositeFraction:
    value: float | None
    rule: str
    reason: str | None = None


_RANK_KINDS = (Kind.MEDIAN, Kind.PERCENTILE)

# Composite pairs with a known fraction even though the product-rule
# hypothesis fails for them. The reciprocated-median pair breaks only when
# about half the points of about half the groups move far, despite both
# levels measuring 0 on their own.
_REGISTRY = {
    (Kind.RECIPROCAL_MEDIAN, Kind.RECIPROCAL_MEDIAN): 0.25,
}


def composite_fraction(spec: CompositeSpec) -> CompositeFraction:
    """Asymptotic breakdown fraction of a composite, when known.

    The product of the per-level fractions applies when every level below
    the outermost steers as cheaply as it breaks (its two analytic fractions
    coincide). Percentile-over-percentile stacks get the exact directional
    formula ``min(q1*q2, (1-q1)*(1-q2))`` instead, and a small registry
    covers known counterexample pairs. Anything else returns None with the
    reason recorded.
    """
    infos = [analytic_breakdown(lv) for lv in spec.levels]
    inner_ok = all(
        info.onto_fraction is not None and info.fraction == info.onto_fraction
        for info in infos[:-1]
    )
    if inner_ok and all(info.fraction is not None for info in infos):
        value = 1.0
        for info in infos:
            value *= info.fraction
        return CompositeFraction(value, "product")
    if spec.depth == 2 and all(lv.kind in _RANK_KINDS for lv in spec.levels):
        q1, q2 = (lv.effective_q for lv in spec.levels)
        return CompositeFraction(
            min(q1 * q2, (1.0 - q1) * (1.0 - q2)), "percentile-pair"
        )
    key = tuple(lv.kind for lv in spec.levels)
    if key in _REGISTRY:
        return CompositeFraction(_REGISTRY[key], "registry")
    return CompositeFraction(
        None,
        "none",
        "product-rule hypothesis unmet: some inner level steers dearer than it breaks",
    )


def check_bounds(
    inner: BreakdownReport,
    outer: BreakdownReport,
    composite: BreakdownReport,
) -> list[BoundCheck]:
    """Sandwich checks tying measured per-level counts to the composite.

    ``g2 * g1 <= g`` always; ``g <= f1 * (g2 + 1)`` when the inner onto
    count was measured.
    """
    g1, g2, g = inner.breakdown_count, outer.breakdown_count, composite.breakdown_count
    checks = [BoundCheck("product-lower", g2 * g1, g, g2 * g1 <= g)]
    if inner.onto_count is not None:
        rhs = inner.onto_count * (g2 + 1)
        checks.append(BoundCheck("sandwich-upper", g, rhs, g <= rhs))
    return checks


def check_unequal_bound(
    inner_reports: Sequence[BreakdownReport],
    outer: BreakdownReport,
    composite: BreakdownReport,
) -> BoundCheck:
    """Unequal-group-size lower bound: the g-counts of the weakest
    ``g2`` groups, summed, never exceed the composite count."""
    gs = sorted(r.breakdown_count for r in inner_reports)
    lhs = sum(gs[: outer.breakdown_count])
    return BoundCheck(
        "unequal-lower", lhs, composite.breakdown_count,
        lhs <= composite.breakdown_count,
    )


def measure_report(
    spec,
    data: HierarchicalDataset,
    model: ContaminationModel | None = None,
    *,
    with_onto: bool = False,
    targets: Sequence | None = None,
    weiszfeld_tol: float = 1e-9,
) -> BreakdownReport:
    """Measure an estimator on a dataset and assemble the full report."""
    model = model or ContaminationModel()
    result = measure_breakdown(spec, data, model, weiszfeld_tol=weiszfeld_tol)
    onto = None
    if with_onto:
        onto = measure_onto(
            spec, data, model, targets, weiszfeld_tol=weiszfeld_tol
        ).count
    if isinstance(spec, CompositeSpec):
        label = spec.label()
        frac = composite_fraction(spec)
        analytic, analytic_onto = frac.value, None
    else:
        label = spec.label()
        info = analytic_breakdown(spec)
        analytic, analytic_onto = info.fraction, info.onto_fraction
    return BreakdownReport(
        estimator=label,
        size=data.total_points,
        breakdown_count=result.count,
        onto_count=onto,
        analytic_fraction=analytic,
        analytic_onto_fraction=analytic_onto,
        witness=result.witness,
    )
