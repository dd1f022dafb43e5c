"""Resistant estimators, hierarchical composition, and breakdown measurement.

The package provides atomic resistant estimators (percentiles, geometric
median, repeated-median line fit), composes them over 2- or 3-level
hierarchical datasets, measures finite-sample breakdown counts under an
explicit adversarial contamination model, plans relocations of a
median-of-medians composite, and simulates percentile-based stream
monitoring under attack. The ``robustcomp`` CLI exposes all of it on
line-oriented dataset files with seeded determinism.
"""

from .breakdown import (
    BoundCheck,
    BreakdownReport,
    BreakdownResult,
    CompositeFraction,
    ContaminationModel,
    OntoResult,
    Witness,
    check_bounds,
    check_unequal_bound,
    composite_fraction,
    contaminate,
    default_targets,
    measure_breakdown,
    measure_breakdown_unequal,
    measure_onto,
    measure_report,
)
from .composition import (
    CompositeSpec,
    HierarchicalDataset,
    evaluate_composite,
    evaluate_unequal,
    evaluate_with_intermediates,
)
from .errors import (
    ChainError,
    ConfigError,
    ConvergenceError,
    DegenerateInputError,
    EmptySampleError,
    EstimatorError,
    ParseError,
)
from .estimators import (
    AnalyticBreakdown,
    EstimatorSpec,
    Kind,
    LineCoeffs,
    analytic_breakdown,
    distance_sum,
    evaluate,
    geometric_median,
    mean,
    median,
    percentile,
    rank_of,
    reciprocal_median,
    repeated_median_line,
)
from .manipulate import (
    AnchorObjective,
    ManipulationPlan,
    PointMove,
    half_count,
    plan_manipulation,
    solve_group,
)
from .monitor import (
    DEFAULT_COMBOS,
    AttackScenario,
    FrugalSketch,
    MonitorReport,
    frugal_update,
    generate_streams,
    report_to_csv,
    run_grid,
    table_scenarios,
)

__version__ = "0.1.0"
