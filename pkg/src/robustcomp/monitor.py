"""Synthetic router-stream monitoring with percentile-of-percentile alarms.

Each of n routers carries a standard-normal stream of length k; an attack
overwrites k1 random positions in n1 random streams with draws from a far
interval. Every router reports a percentile of its stream, a command centre
takes a percentile of the router reports, and a cell is flagged when the
composite magnitude clears the threshold. Per-router percentiles are exact
(sort-based) by default; a constant-memory frugal sketch is available as a
documented approximation and is never used for acceptance checks.

All randomness descends from the scenario seed through spawned substreams,
one per router, so reports do not depend on evaluation order.
"""

from __future__ import annotations

import io
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError
from .estimators import rank_of

__all__ = [
    "DEFAULT_COMBOS",
    "AttackScenario",
    "FrugalSketch",
    "MonitorReport",
    "frugal_update",
    "generate_streams",
    "report_to_csv",
    "run_grid",
    "table_scenarios",
]

DEFAULT_COMBOS = ((0.1, 0.1), (0.9, 0.9), (0.1, 0.9), (0.9, 0.1), (0.5, 0.5))

# The nine default attack rows: (attacked routers, outliers per stream, tail)
_DEFAULT_ROWS = (
    (0, 0, None),
    (11, 110, "positive"),
    (11, 110, "negative"),
    (11, 910, "positive"),
    (11, 910, "negative"),
    (51, 510, "positive"),
    (51, 510, "negative"),
    (51, 910, "positive"),
    (51, 910, "negative"),
)

_POS_INTERVAL = (100.0, 110.0)
_NEG_INTERVAL = (-110.0, -100.0)


@dataclass(frozen=True)
class AttackScenario:
    """One row of the monitoring experiment."""

    router_count: int = 100
    stream_length: int = 1000
    attacked: int = 0
    outliers_per_stream: int = 0
    interval: tuple[float, float] | None = None
    seed: int = 0

    def __post_init__(self):
        if self.router_count <= 0 or self.stream_length <= 0:
            raise ConfigError("router count and stream length must be positive")
        if not 0 <= self.attacked <= self.router_count:
            raise ConfigError(
                f"attacked routers must lie in 0..{self.router_count}, "
                f"got {self.attacked}"
            )
        if not 0 <= self.outliers_per_stream <= self.stream_length:
            raise ConfigError(
                f"outliers per stream must lie in 0..{self.stream_length}, "
                f"got {self.outliers_per_stream}"
            )
        if self.attacked and self.outliers_per_stream and self.interval is None:
            raise ConfigError("attack scenarios need an outlier interval")
        if self.interval is not None and self.interval[0] >= self.interval[1]:
            raise ConfigError("interval must be (low, high) with low < high")

    @property
    def proportion(self) -> float:
        return (self.attacked * self.outliers_per_stream) / (
            self.router_count * self.stream_length
        )


def table_scenarios(seed: int = 0, router_count: int = 100, stream_length: int = 1000):
    """The nine default scenarios, seeded deterministically from one seed."""
    state = np.random.SeedSequence(seed).generate_state(len(_DEFAULT_ROWS))
    out = []
    for row, (n1, k1, tail) in enumerate(_DEFAULT_ROWS):
        interval = None
        if tail == "positive":
            interval = _POS_INTERVAL
        elif tail == "negative":
            interval = _NEG_INTERVAL
        out.append(
            AttackScenario(
                router_count=router_count,
                stream_length=stream_length,
                attacked=n1,
                outliers_per_stream=k1,
                interval=interval,
                seed=int(state[row]),
            )
        )
    return out


def generate_streams(scenario: AttackScenario) -> np.ndarray:
    """Seeded streams, shape (router_count, stream_length).

    Router i's stream comes from its own spawned substream; attacked routers
    and outlier positions are chosen uniformly without replacement from a
    separate substream, and outlier values are uniform over the interval.
    """
    n, k = scenario.router_count, scenario.stream_length
    children = np.random.SeedSequence(scenario.seed).spawn(n + 1)
    streams = np.empty((n, k))
    for i in range(n):
        streams[i] = np.random.Generator(np.random.PCG64(children[i])).standard_normal(k)
    if scenario.attacked and scenario.outliers_per_stream:
        rng = np.random.Generator(np.random.PCG64(children[n]))
        lo, hi = scenario.interval
        hit = rng.choice(n, size=scenario.attacked, replace=False)
        for i in sorted(int(r) for r in hit):
            pos = rng.choice(k, size=scenario.outliers_per_stream, replace=False)
            streams[i, pos] = rng.uniform(lo, hi, size=scenario.outliers_per_stream)
    return streams


def exact_percentile(arr: np.ndarray, q: float) -> float:
    """Sort-based percentile under the package's rank convention."""
    a = np.asarray(arr, dtype=float)
    r = rank_of(q, a.size)
    return float(np.partition(a, r - 1)[r - 1])


@dataclass
class FrugalSketch:
    """One-value streaming percentile estimate (a few bytes per percentile).

    The estimate only ever moves by +-step: up with probability q on larger
    items, down with probability 1-q on smaller items.
    """

    quantile: float
    step: float = 0.05
    estimate: float = 0.0
    rng: np.random.Generator = field(
        default_factory=lambda: np.random.Generator(np.random.PCG64(0))
    )

    def __post_init__(self):
        if not 0.0 < self.quantile < 1.0:
            raise ConfigError("quantile must lie strictly inside (0, 1)")
        if self.step <= 0:
            raise ConfigError("step must be positive")


def frugal_update(sketch: FrugalSketch, item: float) -> FrugalSketch:
    """Feed one item; equal items leave the estimate untouched."""
    if item > sketch.estimate:
        if sketch.rng.random() < sketch.quantile:
            sketch.estimate += sketch.step
    elif item < sketch.estimate:
        if sketch.rng.random() < 1.0 - sketch.quantile:
            sketch.estimate -= sketch.step
    return sketch


def _frugal_final(stream: np.ndarray, q: float, step: float, seed) -> float:
    sketch = FrugalSketch(
        q, step=step, rng=np.random.Generator(np.random.PCG64(seed))
    )
    for item in stream:
        frugal_update(sketch, float(item))
    return sketch.estimate


@dataclass(frozen=True)
class MonitorReport:
    """Grid of composite values for one scenario; flag iff |value| >= threshold."""

    scenario: AttackScenario
    combos: tuple[tuple[float, float], ...]
    values: tuple[float, ...]
    flags: tuple[bool, ...]
    flag_threshold: float
    exact: bool


def run_grid(
    scenario: AttackScenario,
    combos=DEFAULT_COMBOS,
    *,
    exact: bool = True,
    flag_threshold: float = 50.0,
    frugal_step: float = 0.05,
) -> MonitorReport:
    """Evaluate every (router percentile, centre percentile) combo.

    With ``exact`` false the per-router stage uses the frugal sketch final
    estimate instead of the exact percentile; the centre stage stays exact.
    """
    combos = tuple((float(q1), float(q2)) for q1, q2 in combos)
    if not combos:
        raise ConfigError("need at least one percentile combo")
    streams = generate_streams(scenario)
    frugal_seeds = None
    if not exact:
        frugal_seeds = np.random.SeedSequence(scenario.seed).spawn(
            scenario.router_count + 1
        )[-1].spawn(len(combos) * scenario.router_count)
    values = []
    for ci, (q1, q2) in enumerate(combos):
        if exact:
            router_vals = np.array(
                [exact_percentile(s, q1) for s in streams]
            )
        else:
            router_vals = np.array(
                [
                    _frugal_final(
                        s, q1, frugal_step,
                        frugal_seeds[ci * scenario.router_count + i],
                    )
                    for i, s in enumerate(streams)
                ]
            )
        values.append(exact_percentile(router_vals, q2))
    flags = tuple(abs(v) >= flag_threshold for v in values)
    return MonitorReport(
        scenario=scenario,
        combos=combos,
        values=tuple(values),
        flags=flags,
        flag_threshold=flag_threshold,
        exact=exact,
    )


def report_to_csv(reports) -> str:
    """Serialise reports as CSV mirroring the scenario table layout:
    proportion, interval, n1, k1, then one value and one flag column per
    combo."""
    reports = list(reports)
    if not reports:
        return ""
    combos = reports[0].combos
    buf = io.StringIO()
    head = ["proportion", "interval", "n1", "k1"]
    for q1, q2 in combos:
        head.append(f"e1_{q1:g}_e2_{q2:g}")
        head.append(f"flag_{q1:g}_{q2:g}")
    buf.write(",".join(head) + "\n")
    for rep in reports:
        sc = rep.scenario
        interval = (
            f"[{sc.interval[0]:g},{sc.interval[1]:g}]" if sc.interval else ""
        )
        row = [
            f"{sc.proportion * 100:.2f}%",
            interval,
            str(sc.attacked),
            str(sc.outliers_per_stream),
        ]
        for value, flag in zip(rep.values, rep.flags):
            row.append(f"{value:.4f}")
            row.append("true" if flag else "false")
        buf.write(",".join(row) + "\n")
    return buf.getvalue()
