"""Acceptance suite: one test per criterion, one pass/fail line each.

Run with ``pytest tests/test_acceptance.py -v -s`` to see the lines; every
tolerance is fixed here, nothing is calibrated at run time.
"""

import json
import math
import time

import numpy as np
import pytest

from robustcomp import (
    AnchorObjective,
    CompositeSpec,
    ContaminationModel,
    EstimatorSpec,
    HierarchicalDataset,
    Kind,
    composite_fraction,
    distance_sum,
    geometric_median,
    half_count,
    measure_breakdown,
    measure_onto,
    percentile,
    plan_manipulation,
    repeated_median_line,
    run_grid,
    table_scenarios,
)
from robustcomp.cli import main as cli_main

ELEVEN = [0.0, 0.15, 0.2, 0.25, 0.4, 0.55, 0.6, 0.65, 0.72, 0.8, 1.0]
MEDIAN = EstimatorSpec(Kind.MEDIAN)
MODEL = ContaminationModel()


def announce(number, text):
    print(f"ACCEPTANCE {number:2d} PASS: {text}")


def test_criterion_1_worked_example():
    start = time.time()
    count = measure_breakdown(MEDIAN, HierarchicalDataset.flat(ELEVEN), MODEL).count
    elapsed = time.time() - start
    assert count == 5
    assert elapsed < 1.0
    announce(1, f"median breakdown count on the 11-point set = {count} "
                f"({elapsed:.2f}s)")


def test_criterion_2_percentile_limits():
    start = time.time()
    spec = EstimatorSpec(Kind.PERCENTILE, 0.25)
    rng = np.random.default_rng(2)
    g_ratios, f_ratios = [], []
    for n in (20, 100, 400):
        data = HierarchicalDataset.flat(rng.uniform(0, 1, n).tolist())
        g = measure_breakdown(spec, data, MODEL).count
        f = measure_onto(spec, data, MODEL).count
        assert abs(g / n - 0.25) <= 1.5 / n, (n, g)
        assert abs(f / n - 0.75) <= 1.5 / n, (n, f)
        g_ratios.append(g / n)
        f_ratios.append(f / n)
    assert g_ratios[0] <= g_ratios[1] <= g_ratios[2] <= 0.25
    assert f_ratios[0] >= f_ratios[1] >= f_ratios[2] >= 0.75
    elapsed = time.time() - start
    assert elapsed < 1.0
    announce(2, f"percentile(0.25) ratios g/n={g_ratios} f/n={f_ratios} "
                f"({elapsed:.2f}s)")


def test_criterion_3_product_rule_at_desk_scale():
    start = time.time()
    spec = CompositeSpec([MEDIAN, MEDIAN])
    rng = np.random.default_rng(3)
    ratios = {}
    for n in (5, 9, 15):
        groups = rng.uniform(0, 1, size=(n, n)).tolist()
        data = HierarchicalDataset.two_level(groups)
        g = measure_breakdown(spec, data, MODEL).count
        r = max(1, math.ceil(0.5 * n - 1e-9))
        g1 = min(r, n - r + 1) - 1
        f1 = max(r, n - r + 1)
        assert g1 * g1 <= g <= f1 * (g1 + 1), (n, g)
        ratios[n] = g / (n * n)
    assert abs(ratios[15] - 0.25) <= 0.08
    elapsed = time.time() - start
    assert elapsed < 30.0
    announce(3, f"median-of-medians ratios {ratios} within the sandwich "
                f"({elapsed:.2f}s)")


def test_criterion_4_percentile_composite_formula():
    cases = {
        (0.45, 0.55): 0.2475,
        (0.05, 0.95): 0.0475,
        (0.25, 0.75): 0.1875,
    }
    for (q1, q2), expected in cases.items():
        spec = CompositeSpec(
            [EstimatorSpec(Kind.PERCENTILE, q1), EstimatorSpec(Kind.PERCENTILE, q2)]
        )
        assert composite_fraction(spec).value == pytest.approx(expected, abs=0)
    median3 = CompositeSpec([MEDIAN, MEDIAN, MEDIAN])
    assert composite_fraction(median3).value == pytest.approx(0.125, abs=0)
    announce(4, "composite fractions 0.2475 / 0.0475 / 0.1875 / 0.125 exact")


def test_criterion_5_reciprocal_counterexample():
    start = time.time()
    rec = EstimatorSpec(Kind.RECIPROCAL_MEDIAN)
    rng = np.random.default_rng(5)
    n = 15
    level_counts = []
    for _ in range(2):
        data = HierarchicalDataset.flat(rng.uniform(1, 2, n).tolist())
        level_counts.append(measure_breakdown(rec, data, MODEL).count)
    groups = rng.uniform(1, 2, size=(n, n)).tolist()
    comp = measure_breakdown(
        CompositeSpec([rec, rec]), HierarchicalDataset.two_level(groups), MODEL
    )
    ratio = comp.count / (n * n)
    assert level_counts == [0, 0]
    assert ratio >= 0.15
    elapsed = time.time() - start
    assert elapsed < 30.0
    announce(5, f"reciprocal pair: level counts {level_counts}, composite "
                f"ratio {ratio:.3f} >= 0.15 ({elapsed:.2f}s)")


def test_criterion_6_relocation_property_suite():
    start = time.time()
    for n, k in ((5, 8), (10, 5), (50, 20)):
        within_tight = 0
        for trial in range(20):
            rng = np.random.default_rng(6000 + 131 * trial + n * 17 + k)
            groups = [
                [tuple(p) for p in rng.uniform(-10, 10, size=(k, 2))]
                for _ in range(n)
            ]
            data = HierarchicalDataset.two_level(groups, "point")
            target = tuple(rng.uniform(-20, 20, size=2))
            plan = plan_manipulation(data, target)
            assert len(plan.moves) == half_count(n) * half_count(k)
            assert plan.top_grad_norm < 1e-5
            assert all(gn < 1e-5 for gn in plan.group_grad_norms)
            per_coord = max(
                abs(plan.achieved[0] - target[0]), abs(plan.achieved[1] - target[1])
            )
            assert per_coord <= 0.05, (n, k, trial, per_coord)
            if per_coord <= 0.01:
                within_tight += 1
        assert within_tight >= 18, (n, k, within_tight)
    elapsed = time.time() - start
    assert elapsed < 120.0
    announce(6, f"relocation plans at (5,8)/(10,5)/(50,20): 20 trials each, "
                f">=18 within 0.01, all within 0.05 ({elapsed:.1f}s)")


def test_criterion_7_gradient_correctness():
    start = time.time()
    rng = np.random.default_rng(7)
    checked = 0
    while checked < 100:
        k = int(rng.integers(3, 12))
        free_count = int(rng.integers(1, k))
        pts = rng.uniform(-10, 10, size=(k, 2))
        anchor = tuple(rng.uniform(-15, 15, size=2))
        obj = AnchorObjective(pts[free_count:], anchor)
        free = pts[:free_count]
        _, grad = obj.value_and_gradient(free)
        step = 1e-6
        for i in range(free_count):
            for axis in range(2):
                up, dn = free.copy(), free.copy()
                up[i, axis] += step
                dn[i, axis] -= step
                fd = (obj.value(up) - obj.value(dn)) / (2 * step)
                denom = max(abs(fd), abs(grad[i, axis]), 1e-12)
                assert abs(grad[i, axis] - fd) / denom <= 1e-4
        checked += 1
    elapsed = time.time() - start
    assert elapsed < 5.0
    announce(7, f"analytic gradient matched central differences at "
                f"{checked} random states ({elapsed:.2f}s)")


EXPECTED_FLAGS = [
    (False, False, False, False, False),
    (False, True, False, False, False),
    (True, False, False, False, False),
    (False, True, True, False, False),
    (True, False, False, True, False),
    (False, True, False, False, True),
    (True, False, False, False, True),
    (False, True, True, False, True),
    (True, False, False, True, True),
]


def test_criterion_8_flag_pattern():
    start = time.time()
    for row, scenario in enumerate(table_scenarios(seed=88)):
        report = run_grid(scenario, flag_threshold=50.0)
        assert report.flags == EXPECTED_FLAGS[row], (row, report.values)
        for value, flag in zip(report.values, report.flags):
            if flag:
                assert 100.0 <= abs(value) <= 110.0, (row, value)
            else:
                assert -3.0 <= value <= 3.0, (row, value)
    elapsed = time.time() - start
    assert elapsed < 10.0
    announce(8, f"all 45 cells match the expected flag pattern and ranges "
                f"({elapsed:.2f}s)")


def test_criterion_9_estimator_unit_oracles():
    start = time.time()
    rng = np.random.default_rng(9)

    def lower_median(vals):
        s = sorted(vals)
        return s[(len(s) - 1) // 2]

    def siegel_oracle(points):
        inner = []
        for i, (xi, yi) in enumerate(points):
            slopes = [
                (yj - yi) / (xj - xi)
                for j, (xj, yj) in enumerate(points)
                if j != i and xj != xi
            ]
            inner.append(lower_median(slopes))
        a = lower_median(inner)
        return a, lower_median([y - a * x for x, y in points])

    for _ in range(1000):
        n = int(rng.integers(2, 9))
        pts = [tuple(p) for p in rng.uniform(-50, 50, size=(n, 2))]
        if len({p[0] for p in pts}) < n:
            continue
        got = repeated_median_line(pts)
        want = siegel_oracle(pts)
        assert got == pytest.approx(want, abs=1e-9)

    for _ in range(100):
        pts = [tuple(p) for p in rng.uniform(-5, 5, size=(3, 2))]
        gm = geometric_median(pts, tol=1e-9)
        resid = np.array([0.0, 0.0])
        degenerate = False
        for p in pts:
            d = math.hypot(p[0] - gm[0], p[1] - gm[1])
            if d < 1e-12:
                degenerate = True
                break
            resid += np.array([(p[0] - gm[0]) / d, (p[1] - gm[1]) / d])
        if not degenerate:
            assert np.hypot(*resid) <= 1e-9
        lo = np.array(pts).min(axis=0) - 0.5
        hi = np.array(pts).max(axis=0) + 0.5
        gx, gy = np.meshgrid(
            np.linspace(lo[0], hi[0], 201), np.linspace(lo[1], hi[1], 201)
        )
        obj = np.zeros_like(gx)
        for px, py in pts:
            obj += np.hypot(gx - px, gy - py)
        assert distance_sum(pts, gm) <= obj.min() + 1e-9

    for _ in range(300):
        n = int(rng.integers(1, 60))
        q = float(rng.uniform(0.01, 0.99))
        values = rng.uniform(-100, 100, n).tolist()
        r = max(1, math.ceil(q * n - 1e-9))
        assert percentile(q, values) == sorted(values)[r - 1]

    elapsed = time.time() - start
    assert elapsed < 30.0
    announce(9, f"line-fit vs brute force (1000), geometric median vs grids "
                f"(100), percentile vs sort oracle (300) ({elapsed:.1f}s)")


def test_criterion_10_cli_determinism(tmp_path):
    datasets = {}
    mm = tmp_path / "mm.txt"
    mm.write_text("0 1 2 3\n1 4 5 6\n2 7 8 9\n")
    datasets["estimate"] = ["estimate", str(mm), "--depth", "2"]
    x11 = tmp_path / "x11.txt"
    x11.write_text(" ".join(str(v) for v in ELEVEN) + "\n")
    datasets["breakdown"] = [
        "breakdown", str(x11), "--depth", "1", "--estimator", "1=median", "--onto",
    ]
    rng = np.random.default_rng(10)
    pts = tmp_path / "pts.txt"
    pts.write_text(
        "\n".join(
            f"{i} "
            + " ".join(
                f"{float(x)!r},{float(y)!r}" for x, y in rng.uniform(-10, 10, (8, 2))
            )
            for i in range(5)
        )
        + "\n"
    )
    datasets["manipulate"] = ["manipulate", str(pts), "--target", "3.5,-2.0"]
    datasets["monitor"] = ["monitor", "--seed", "10"]
    for name, argv in datasets.items():
        first = tmp_path / f"{name}_1.json"
        second = tmp_path / f"{name}_2.json"
        assert cli_main(argv + ["--out", str(first)]) == 0
        assert cli_main(argv + ["--out", str(second)]) == 0
        assert first.read_bytes() == second.read_bytes(), name
        json.loads(first.read_text())
    announce(10, "estimate/breakdown/manipulate/monitor reruns are "
                 "byte-identical")
