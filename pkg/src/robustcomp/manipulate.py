"""Steering a two-level geometric-median composite onto a chosen target.

Given ``n`` groups of ``k`` planar points and a target, the plan moves the
first ``ceil(k/2)`` points of each of the first ``ceil(n/2)`` groups so the
geometric median of the per-group geometric medians lands on the target.
Both stages run the same machinery: minimise

    h(free points) = || sum_i (p_i - anchor) / ||p_i - anchor|| ||^2

over the free points, the fixed points contributing constant pull. The sum
of unit vectors vanishing is necessary and sufficient for the anchor to be
the geometric median of the rebuilt set, so driving h to zero certifies the
relocation. Minimisation is plain gradient descent with a backtracking
(Armijo) line search whose trial step carries over (doubled) from the last
accepted step; denominators carry a 1e-12 smoothing term because the exact
gradient blows up when a free point touches the anchor.

The descent terminates once the gradient norm is below ``grad_tol`` (default
1e-5) and the objective is essentially zero; the achieved composite and its
distance to the target are recomputed from the rebuilt dataset and reported
in the plan, never assumed.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .composition import HierarchicalDataset
from .errors import ConvergenceError
from .estimators import Point, geometric_median

__all__ = [
    "AnchorObjective",
    "GroupSolve",
    "ManipulationPlan",
    "PointMove",
    "half_count",
    "plan_manipulation",
    "solve_group",
]

_EPS = 1e-12  # denominator smoothing near the anchor
_ARMIJO = 1e-4
_SHRINK = 0.5
_MIN_STEP = 1e-18


def half_count(n: int) -> int:
    """n/2 rounded up: the number of points (or groups) a plan moves."""
    return (n + 1) // 2


class AnchorObjective:
    """Residual objective for one anchor with a fixed point block.

    ``value`` and ``value_and_gradient`` take the free points as an (m, 2)
    array; the k - m fixed points only contribute their constant pull.
    """

    def __init__(self, fixed_points, anchor: Point):
        fixed = np.asarray(fixed_points, dtype=float).reshape(-1, 2)
        self.anchor = (float(anchor[0]), float(anchor[1]))
        self.fixed = fixed
        if len(fixed):
            dx = fixed[:, 0] - self.anchor[0]
            dy = fixed[:, 1] - self.anchor[1]
            inv = 1.0 / np.sqrt(dx * dx + dy * dy + _EPS)
            self._fixed_pull = (float((dx * inv).sum()), float((dy * inv).sum()))
        else:
            self._fixed_pull = (0.0, 0.0)

    def _sums(self, free: np.ndarray):
        dx = free[:, 0] - self.anchor[0]
        dy = free[:, 1] - self.anchor[1]
        d2 = dx * dx + dy * dy + _EPS
        inv = 1.0 / np.sqrt(d2)
        sx = self._fixed_pull[0] + float((dx * inv).sum())
        sy = self._fixed_pull[1] + float((dy * inv).sum())
        return sx, sy, dx, dy, d2, inv

    def value(self, free_points) -> float:
        free = np.asarray(free_points, dtype=float).reshape(-1, 2)
        sx, sy, *_ = self._sums(free)
        return sx * sx + sy * sy

    def value_and_gradient(self, free_points):
        free = np.asarray(free_points, dtype=float).reshape(-1, 2)
        sx, sy, dx, dy, d2, inv = self._sums(free)
        t3 = inv / d2
        a = dy * dy * t3
        b = dx * dy * t3
        c = dx * dx * t3
        grad = np.empty_like(free)
        grad[:, 0] = 2.0 * (sx * a - sy * b)
        grad[:, 1] = 2.0 * (-sx * b + sy * c)
        return sx * sx + sy * sy, grad


@dataclass
class _BatchState:
    free: np.ndarray        # (B, m, 2)
    iterations: np.ndarray  # (B,)
    grad_norm: np.ndarray   # (B,)
    objective: np.ndarray   # (B,)


def _batch_sums(free, ax, ay, fixed_pull):
    dx = free[:, :, 0] - ax[:, None]
    dy = free[:, :, 1] - ay[:, None]
    d2 = dx * dx + dy * dy + _EPS
    inv = 1.0 / np.sqrt(d2)
    sx = fixed_pull[:, 0] + (dx * inv).sum(axis=1)
    sy = fixed_pull[:, 1] + (dy * inv).sum(axis=1)
    return sx, sy, dx, dy, d2, inv


def _minimize_batch(
    fixed,
    free0,
    anchors,
    *,
    grad_tol: float,
    h_tol: float,
    max_iter: int,
    track: list | None = None,
) -> _BatchState:
    """Run B independent anchor problems in lock step.

    All problems share the free/fixed block shapes so the per-iteration work
    is a handful of vectorised array operations regardless of B. A problem
    is done once its gradient norm is below grad_tol and its objective below
    h_tol; the line search stalling with the gradient criterion already met
    also counts as done. Anything else raises ConvergenceError.
    """
    free = np.array(free0, dtype=float)
    if free.ndim == 2:
        free = free[None]
    bsz, _, _ = free.shape
    fixed = np.asarray(fixed, dtype=float)
    if fixed.ndim == 2:
        fixed = fixed[None]
    anchors = np.asarray(anchors, dtype=float).reshape(bsz, 2)
    ax, ay = anchors[:, 0], anchors[:, 1]

    if fixed.shape[1]:
        fdx = fixed[:, :, 0] - ax[:, None]
        fdy = fixed[:, :, 1] - ay[:, None]
        finv = 1.0 / np.sqrt(fdx * fdx + fdy * fdy + _EPS)
        fixed_pull = np.stack(
            [(fdx * finv).sum(axis=1), (fdy * finv).sum(axis=1)], axis=1
        )
    else:
        fixed_pull = np.zeros((bsz, 2))

    def objective(z):
        sx, sy, *_ = _batch_sums(z, ax, ay, fixed_pull)
        return sx * sx + sy * sy

    def gradient(z):
        sx, sy, dx, dy, d2, inv = _batch_sums(z, ax, ay, fixed_pull)
        t3 = inv / d2
        a = dy * dy * t3
        b = dx * dy * t3
        c = dx * dx * t3
        g = np.empty_like(z)
        g[:, :, 0] = 2.0 * (sx[:, None] * a - sy[:, None] * b)
        g[:, :, 1] = 2.0 * (-sx[:, None] * b + sy[:, None] * c)
        return sx * sx + sy * sy, g

    h, grad = gradient(free)
    gn = np.sqrt((grad * grad).sum(axis=(1, 2)))
    done = (gn < grad_tol) & (h <= h_tol)
    iterations = np.zeros(bsz, dtype=int)
    # The initial trial step starts at 1.0 and doubles after every accepted
    # step; backtracking halves it as needed, so ill-conditioned problems
    # stop paying for a full cold restart of the search each iteration.
    step_init = np.ones(bsz)

    for _ in range(max_iter):
        if done.all():
            break
        active = ~done
        step = np.where(active, step_init, 0.0)
        gsq = gn * gn
        accepted = ~active
        trial_h = h.copy()
        trial = free.copy()
        while not accepted.all():
            cand = free - step[:, None, None] * grad
            cand_h = objective(cand)
            ok = active & ~accepted & (cand_h <= h - _ARMIJO * step * gsq)
            trial[ok] = cand[ok]
            trial_h[ok] = cand_h[ok]
            accepted |= ok
            step = np.where(accepted, step, step * _SHRINK)
            stalled = active & ~accepted & (step < _MIN_STEP)
            if stalled.any():
                bad = stalled & (gn >= grad_tol)
                if bad.any():
                    raise ConvergenceError(
                        "line search stalled with gradient norm "
                        f"{gn[bad].max():.3e} >= {grad_tol}",
                        best=float(h[bad].min()),
                    )
                done |= stalled
                accepted |= stalled
        moved = active & ~done
        free[moved] = trial[moved]
        h[moved] = trial_h[moved]
        step_init[moved] = np.maximum(step[moved] * 2.0, 1e-12)
        iterations[moved] += 1
        if track is not None:
            track.append(h.copy())
        new_h, new_grad = gradient(free)
        h = np.where(moved, new_h, h)
        grad[moved] = new_grad[moved]
        gn = np.sqrt((grad * grad).sum(axis=(1, 2)))
        done |= (gn < grad_tol) & (h <= h_tol)

    pending = ~done & (gn >= grad_tol)
    if pending.any():
        raise ConvergenceError(
            f"{int(pending.sum())} anchor problem(s) did not converge in "
            f"{max_iter} iterations",
            best=float(h[pending].min()),
        )
    return _BatchState(free, iterations, gn, h)


@dataclass(frozen=True)
class GroupSolve:
    points: tuple[Point, ...]
    iterations: int
    grad_norm: float
    objective: float


def solve_group(
    group,
    target: Point,
    k_tilde: int | None = None,
    grad_tol: float = 1e-5,
    *,
    h_tol: float = 1e-12,
    max_iter: int = 100_000,
):
    """Move the first ``k_tilde`` points of a group so its geometric median
    is the target.

    The free points start at their original positions. Returns
    ``(new_group, iterations, final_gradient_norm)``; the new group keeps
    the untouched points bit-identical. Non-convergence raises
    ``ConvergenceError`` carrying the best objective reached.
    """
    pts = [(float(p[0]), float(p[1])) for p in group]
    k = len(pts)
    if k_tilde is None:
        k_tilde = half_count(k)
    if not 1 <= k_tilde <= k:
        raise ValueError(f"k_tilde must be in 1..{k}, got {k_tilde}")
    if grad_tol <= 0:
        raise ValueError("grad_tol must be positive")
    state = _minimize_batch(
        np.asarray(pts[k_tilde:], dtype=float).reshape(1, -1, 2),
        np.asarray(pts[:k_tilde], dtype=float).reshape(1, -1, 2),
        np.asarray([target], dtype=float),
        grad_tol=grad_tol,
        h_tol=h_tol,
        max_iter=max_iter,
    )
    moved = [(float(x), float(y)) for x, y in state.free[0]]
    new_group = tuple(moved) + tuple(pts[k_tilde:])
    return new_group, int(state.iterations[0]), float(state.grad_norm[0])


@dataclass(frozen=True)
class PointMove:
    group: int
    index: int
    old: Point
    new: Point


@dataclass(frozen=True)
class ManipulationPlan:
    """Everything needed to audit and replay one relocation.

    ``moves`` lists exactly ``moved_groups * moved_per_group`` entries, the
    first ``moved_per_group`` point slots of each of the first
    ``moved_groups`` groups. ``achieved`` and ``residual`` come from
    re-evaluating the composite on the rebuilt dataset.
    """

    target: Point
    moved_groups: int
    moved_per_group: int
    moves: tuple[PointMove, ...]
    achieved: Point
    residual: float
    top_iterations: int
    top_grad_norm: float
    group_iterations: tuple[int, ...]
    group_grad_norms: tuple[float, ...]


def plan_manipulation(
    data: HierarchicalDataset,
    target: Point,
    *,
    grad_tol: float = 1e-5,
    h_tol: float = 1e-12,
    max_iter: int = 100_000,
    weiszfeld_tol: float = 1e-9,
) -> ManipulationPlan:
    """Relocate the median-of-medians of a depth-2 point dataset onto target.

    Stage A solves the outer anchor problem over the group medians, the
    first ``ceil(n/2)`` medians free, yielding the replacement medians.
    Stage B batches one anchor problem per moved group, driving each group's
    median to its replacement. Group solves are independent; they run in
    lock step purely for speed.
    """
    if data.depth != 2 or data.kind != "point":
        raise ValueError("manipulation needs a depth-2 dataset of planar points")
    if grad_tol <= 0:
        raise ValueError("grad_tol must be positive")
    target = (float(target[0]), float(target[1]))
    groups = data.groups
    n = len(groups)
    k = len(groups[0])
    nt, kt = half_count(n), half_count(k)

    medians = [geometric_median(g, tol=weiszfeld_tol) for g in groups]
    try:
        top = _minimize_batch(
            np.asarray(medians[nt:], dtype=float).reshape(1, -1, 2),
            np.asarray(medians[:nt], dtype=float).reshape(1, -1, 2),
            np.asarray([target], dtype=float),
            grad_tol=grad_tol,
            h_tol=h_tol,
            max_iter=max_iter,
        )
    except ConvergenceError as exc:
        raise ConvergenceError(f"outer-median stage: {exc}", best=exc.best) from exc
    new_medians = top.free[0]

    fixed = np.asarray([g[kt:] for g in groups[:nt]], dtype=float).reshape(nt, -1, 2)
    free0 = np.asarray([g[:kt] for g in groups[:nt]], dtype=float).reshape(nt, kt, 2)
    try:
        stage_b = _minimize_batch(
            fixed,
            free0,
            new_medians,
            grad_tol=grad_tol,
            h_tol=h_tol,
            max_iter=max_iter,
        )
    except ConvergenceError as exc:
        raise ConvergenceError(
            f"group-relocation stage: {exc}", best=exc.best
        ) from exc

    updates = {}
    moves = []
    for i in range(nt):
        for j in range(kt):
            new_pt = (float(stage_b.free[i, j, 0]), float(stage_b.free[i, j, 1]))
            updates[(i, j)] = new_pt
            moves.append(PointMove(i, j, groups[i][j], new_pt))
    new_data = data.replace(updates)

    final_medians = [geometric_median(g, tol=weiszfeld_tol) for g in new_data.groups]
    achieved = geometric_median(final_medians, tol=weiszfeld_tol)
    residual = float(np.hypot(achieved[0] - target[0], achieved[1] - target[1]))
    return ManipulationPlan(
        target=target,
        moved_groups=nt,
        moved_per_group=kt,
        moves=tuple(moves),
        achieved=achieved,
        residual=residual,
        top_iterations=int(top.iterations[0]),
        top_grad_norm=float(top.grad_norm[0]),
        group_iterations=tuple(int(v) for v in stage_b.iterations),
        group_grad_norms=tuple(float(v) for v in stage_b.grad_norm),
    )
