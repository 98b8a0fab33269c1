"""Collar metrics, scalar-curvature-preserving boundary deformations,
Yamabe-Robin normalization and Chern-character algebra, with numerical
verification reports."""
from .collar import (
    CheckResult,
    CollarMetric,
    PreconditionError,
    VerificationError,
    check_boundary_condition,
    collar_scalar,
    curvature_batch,
    mean_curvature,
    scal_lower_bound,
    second_fundamental_form,
    trace_comparison_check,
    weingarten,
)
from .cutoffs import chi_delta, check_chi_family
from .deformations import (
    DeformationSchedule,
    bend_II,
    c_normalize,
    cone_deform,
    desingularize,
    master,
    reverify,
    strict_push,
)
from .geometry import FlatTorus, RoundSphere, SymTensorField
from .report import VerificationReport

__version__ = "0.1.0"

__all__ = [
    "CheckResult",
    "CollarMetric",
    "DeformationSchedule",
    "FlatTorus",
    "PreconditionError",
    "RoundSphere",
    "SymTensorField",
    "VerificationError",
    "VerificationReport",
    "bend_II",
    "c_normalize",
    "check_boundary_condition",
    "check_chi_family",
    "chi_delta",
    "collar_scalar",
    "cone_deform",
    "curvature_batch",
    "desingularize",
    "master",
    "mean_curvature",
    "reverify",
    "scal_lower_bound",
    "second_fundamental_form",
    "strict_push",
    "trace_comparison_check",
    "weingarten",
]
