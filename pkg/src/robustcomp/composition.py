"""Hierarchical datasets and composite estimators over them.

A composite estimator applies its innermost estimator to every innermost
group, then the next estimator to the multiset of those outputs, and so on.
Datasets come in three depths: a flat multiset (depth 1, for atomic
estimators), ``n`` groups of ``k`` points (depth 2), and ``m`` outer groups
of ``n`` inner groups of ``k`` points (depth 3). All groups at the same
level must have equal size; ``evaluate_unequal`` is the one escape hatch and
exists so the unequal-group-size lower bound can be exercised.

Everything here is immutable and evaluation is a pure function of its
inputs, so values may be shared and evaluated concurrently.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

from .errors import ChainError, EstimatorError
from .estimators import EstimatorSpec, evaluate

__all__ = [
    "CompositeSpec",
    "HierarchicalDataset",
    "evaluate_composite",
    "evaluate_unequal",
    "evaluate_with_intermediates",
]


def _norm_payload(p, kind: str):
    if kind == "scalar":
        v = float(p)
        if not math.isfinite(v):
            raise ValueError("non-finite value")
        return v
    x, y = float(p[0]), float(p[1])
    if not (math.isfinite(x) and math.isfinite(y)):
        raise ValueError("non-finite coordinate")
    return (x, y)


def _norm_group(group, kind: str) -> tuple:
    g = tuple(_norm_payload(p, kind) for p in group)
    if not g:
        raise ValueError("empty group")
    return g


@dataclass(frozen=True)
class HierarchicalDataset:
    """A point multiset organised into 1, 2, or 3 levels of equal groups.

    ``groups`` is always stored two-or-three levels deep: depth 1 and 2 use
    ``(group, ...)``; depth 3 uses ``((group, ...), ...)``. ``kind`` is
    ``"scalar"`` for reals and ``"point"`` for planar points.
    """

    depth: int
    kind: str
    groups: tuple

    @classmethod
    def flat(cls, values, kind: str = "scalar") -> "HierarchicalDataset":
        return cls(1, kind, (_norm_group(values, kind),))

    @classmethod
    def two_level(cls, groups, kind: str = "scalar") -> "HierarchicalDataset":
        gs = tuple(_norm_group(g, kind) for g in groups)
        if not gs:
            raise ValueError("dataset has no groups")
        sizes = {len(g) for g in gs}
        if len(sizes) > 1:
            raise ValueError(f"groups must have equal size, got sizes {sorted(sizes)}")
        return cls(2, kind, gs)

    @classmethod
    def three_level(cls, outer_groups, kind: str = "scalar") -> "HierarchicalDataset":
        outers = tuple(
            tuple(_norm_group(g, kind) for g in outer) for outer in outer_groups
        )
        if not outers or not all(outers):
            raise ValueError("dataset has no groups")
        inner_counts = {len(o) for o in outers}
        sizes = {len(g) for o in outers for g in o}
        if len(inner_counts) > 1 or len(sizes) > 1:
            raise ValueError("all outer groups need equally many equal-size groups")
        return cls(3, kind, outers)

    @property
    def group_count(self) -> int:
        """Number of innermost groups per outer group (n)."""
        if self.depth == 3:
            return len(self.groups[0])
        return len(self.groups)

    @property
    def outer_count(self) -> int:
        """Number of outer groups (m); 1 below depth 3."""
        return len(self.groups) if self.depth == 3 else 1

    @property
    def group_size(self) -> int:
        """Points per innermost group (k)."""
        if self.depth == 3:
            return len(self.groups[0][0])
        return len(self.groups[0])

    @property
    def total_points(self) -> int:
        if self.depth == 3:
            return self.outer_count * self.group_count * self.group_size
        return sum(len(g) for g in self.groups)

    def paths(self) -> list[tuple]:
        """Stable addresses of every point, innermost index last."""
        if self.depth == 3:
            return [
                (jo, i, j)
                for jo, outer in enumerate(self.groups)
                for i, g in enumerate(outer)
                for j in range(len(g))
            ]
        return [
            (i, j) for i, g in enumerate(self.groups) for j in range(len(g))
        ]

    def get(self, path: tuple):
        if self.depth == 3:
            jo, i, j = path
            return self.groups[jo][i][j]
        i, j = path
        return self.groups[i][j]

    def replace(self, updates: dict) -> "HierarchicalDataset":
        """Copy of the dataset with the points at ``updates`` keys swapped
        for the given payloads; everything else is carried over untouched."""
        if self.depth == 3:
            new = [[list(g) for g in outer] for outer in self.groups]
            for (jo, i, j), payload in updates.items():
                new[jo][i][j] = _norm_payload(payload, self.kind)
            groups = tuple(tuple(tuple(g) for g in outer) for outer in new)
        else:
            new = [list(g) for g in self.groups]
            for (i, j), payload in updates.items():
                new[i][j] = _norm_payload(payload, self.kind)
            groups = tuple(tuple(g) for g in new)
        return HierarchicalDataset(self.depth, self.kind, groups)


@dataclass(frozen=True)
class CompositeSpec:
    """An ordered stack of atomic estimators, innermost first.

    Space tags must chain: the output space of each level is the input space
    of the next. A mismatch (for instance a line fit feeding a percentile)
    is rejected here, at construction, never at evaluation time.
    """

    levels: tuple[EstimatorSpec, ...]

    def __init__(self, levels):
        levels = tuple(levels)
        if len(levels) not in (2, 3):
            raise ChainError(f"composite needs 2 or 3 levels, got {len(levels)}")
        for lo, hi in zip(levels, levels[1:]):
            if lo.output_space != hi.input_space:
                raise ChainError(
                    f"level output space {lo.output_space!r} ({lo.label()}) does "
                    f"not feed level input space {hi.input_space!r} ({hi.label()})"
                )
        object.__setattr__(self, "levels", levels)

    @property
    def depth(self) -> int:
        return len(self.levels)

    @property
    def input_space(self) -> str:
        return self.levels[0].input_space

    @property
    def output_space(self) -> str:
        return self.levels[-1].output_space

    def label(self) -> str:
        return " -> ".join(lv.label() for lv in self.levels)


def _eval_group(spec: EstimatorSpec, group, where: str, weiszfeld_tol: float):
    try:
        return evaluate(spec, group, weiszfeld_tol=weiszfeld_tol)
    except EstimatorError as exc:
        raise type(exc)(f"{where}: {exc}") from exc


def evaluate_with_intermediates(
    spec: CompositeSpec,
    data: HierarchicalDataset,
    *,
    weiszfeld_tol: float = 1e-9,
):
    """Evaluate a composite and return ``(value, per_level_outputs)``.

    ``per_level_outputs`` holds the level-1 outputs (nested per outer group
    at depth 3) and, at depth 3, the level-2 outputs as well.
    """
    if spec.depth != data.depth:
        raise ChainError(
            f"composite has {spec.depth} levels but dataset depth is {data.depth}"
        )
    if spec.input_space != ("2d" if data.kind == "point" else "1d"):
        raise ChainError(
            f"composite expects {spec.input_space} input but dataset is {data.kind}"
        )
    if data.depth == 2:
        inner = [
            _eval_group(spec.levels[0], g, f"group {i}", weiszfeld_tol)
            for i, g in enumerate(data.groups)
        ]
        value = _eval_group(spec.levels[1], inner, "outer level", weiszfeld_tol)
        return value, [inner]
    inner_all = [
        [
            _eval_group(spec.levels[0], g, f"group ({jo},{i})", weiszfeld_tol)
            for i, g in enumerate(outer)
        ]
        for jo, outer in enumerate(data.groups)
    ]
    mid = [
        _eval_group(spec.levels[1], vals, f"outer group {jo}", weiszfeld_tol)
        for jo, vals in enumerate(inner_all)
    ]
    value = _eval_group(spec.levels[2], mid, "outermost level", weiszfeld_tol)
    return value, [inner_all, mid]


def evaluate_composite(
    spec: CompositeSpec,
    data: HierarchicalDataset,
    *,
    weiszfeld_tol: float = 1e-9,
):
    """Apply a 2- or 3-level composite estimator to a matching dataset."""
    return evaluate_with_intermediates(spec, data, weiszfeld_tol=weiszfeld_tol)[0]


def evaluate_unequal(
    spec: CompositeSpec,
    groups: Sequence[Sequence],
    *,
    kind: str = "scalar",
    weiszfeld_tol: float = 1e-9,
):
    """Two-level composite evaluation without the equal-group-size contract."""
    if spec.depth != 2:
        raise ChainError("unequal-size evaluation is defined for 2-level composites")
    gs = [_norm_group(g, kind) for g in groups]
    if not gs:
        raise ValueError("dataset has no groups")
    inner = [
        _eval_group(spec.levels[0], g, f"group {i}", weiszfeld_tol)
        for i, g in enumerate(gs)
    ]
    return _eval_group(spec.levels[1], inner, "outer level", weiszfeld_tol)
