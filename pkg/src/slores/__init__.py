"""Safe feature screening (Slores) for l1-regularized logistic regression."""

from .bounds import BoundCase, bound_all, bound_feature, oracle_bound, screen_all
from .data import Dataset, dump_svmlight, load_svmlight, precompute, synthesize
from .dual import (
    DualPoint,
    ScreeningGeometry,
    build_geometry,
    dual_gradient,
    dual_objective,
    lambda_max,
    max_geometry,
    project_complement_b,
    radius,
    theta_max,
)
from .errors import (
    BoundError,
    ConfigError,
    ConvergenceError,
    DataError,
    DegenerateProblemError,
    GeometryError,
    SafetyViolation,
    SloresError,
)
from .path import PathConfig, PathReport, emit_report, run_path
from .screening import Rule, ScreenResult, no_screen, rejection_ratio, slores, strong_rule
from .solver import PrimalSolution, duality_gap, fit, kkt_check, recover_dual

__version__ = "0.1.0"
