"""Primal-dual forward-backward-forward splitting for monotone inclusions
coupling a Lipschitz operator, parallel sums and linear compositions.

Main entry points: :func:`pdfbf.fbf.solve` for operator problems and
:func:`pdfbf.minimize.solve_minimization` for composite convex programs.
"""

from .errors import (
    ConfigurationError,
    DivergenceError,
    InfeasibleError,
    OperatorNormError,
    ShapeError,
    StepSizeError,
    UnsupportedEvaluation,
)
from .fbf import (
    ErrorInjector,
    PrimalDualState,
    ProblemSpec,
    SolveReport,
    StepPolicy,
    StoppingRule,
    Termination,
    compute_beta,
    kkt_residual,
    solve,
)
from .linalg import LinearOperator, Space, check_adjoint, operator_norm
from .minimize import MinBlock, MinimizationSpec, solve_minimization

__version__ = "0.1.0"

__all__ = [
    "ConfigurationError", "DivergenceError", "InfeasibleError", "OperatorNormError",
    "ShapeError", "StepSizeError", "UnsupportedEvaluation",
    "ErrorInjector", "PrimalDualState", "ProblemSpec", "SolveReport", "StepPolicy",
    "StoppingRule", "Termination", "compute_beta", "kkt_residual", "solve",
    "LinearOperator", "Space", "check_adjoint", "operator_norm",
    "MinBlock", "MinimizationSpec", "solve_minimization",
]
