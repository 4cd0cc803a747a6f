"""Feature-noise robust SVM with dynamic gap-safe sample screening."""

from .data import (
    Dataset,
    ParseError,
    Sample,
    augment_bias,
    gen_gaussian,
    parse_csv,
    parse_libsvm,
    set_radii,
    standardize,
    to_libsvm,
)
from .model import (
    DualIterate,
    GapConsistencyError,
    Hyperparams,
    KKTReport,
    Margin,
    dual_aggregates,
    dual_objective,
    duality_gap,
    evaluate_iterate,
    kkt_residuals,
    margin,
    margins,
    primal_from_dual,
    primal_objective,
    robust_loss,
    robust_losses,
)
from .solver import (
    FrozenAssignment,
    SolveReport,
    brute_force_dual,
    dual_gradient,
    project_box,
    solve,
)
from .screening import (
    AuditReport,
    DynamicScreenResult,
    Partition,
    SafeBall,
    ScreenDecision,
    ScreenTrace,
    classify,
    dynamic_screen,
    gap_ball,
    ideal_screen,
    margin_bounds,
    verify_no_false_screening,
)
from .bench import RunRecord, SummaryRow, run_grid, summarize
from .estimator import RobustSVC

__version__ = "0.1.0"

__all__ = [
    "Dataset",
    "ParseError",
    "Sample",
    "augment_bias",
    "gen_gaussian",
    "parse_csv",
    "parse_libsvm",
    "set_radii",
    "standardize",
    "to_libsvm",
    "DualIterate",
    "GapConsistencyError",
    "Hyperparams",
    "KKTReport",
    "Margin",
    "dual_aggregates",
    "dual_objective",
    "duality_gap",
    "evaluate_iterate",
    "kkt_residuals",
    "margin",
    "margins",
    "primal_from_dual",
    "primal_objective",
    "robust_loss",
    "robust_losses",
    "FrozenAssignment",
    "SolveReport",
    "brute_force_dual",
    "dual_gradient",
    "project_box",
    "solve",
    "AuditReport",
    "DynamicScreenResult",
    "Partition",
    "SafeBall",
    "ScreenDecision",
    "ScreenTrace",
    "classify",
    "dynamic_screen",
    "gap_ball",
    "ideal_screen",
    "margin_bounds",
    "verify_no_false_screening",
    "RunRecord",
    "SummaryRow",
    "run_grid",
    "summarize",
    "RobustSVC",
    "__version__",
]
