"""Einstein metrics on the homogeneous spaces ``F^(n+1)/diag(F)``.

A metric is encoded by a lower-triangular frame with positive diagonal.
The package evaluates the normalized scalar curvature, finds its critical
points at fixed volume, groups them into isometry classes and builds the
routine metrics coming from integer partitions.
"""
from .catalog import (
    EMHS_LOWER,
    PartitionSummary,
    bounds,
    enumerate_compositions,
    enumerate_partitions,
    partition_count,
    routine_critical_points,
    routine_from_partition,
    standard_einstein_matrix,
    standard_matrix,
)
from .curvature import (
    CurvatureReport,
    curvature_report,
    einstein_constant,
    gradient_ratio,
    scalar_curvature_general,
    scalar_curvature_triangular,
)
from .errors import CapacityError, DegenerateMetricError, DomainError, LedgerObataError, ReferenceUnavailableError
from .isometry import IsometryClass, canonical_form, classify, hat, orbit_group
from .metric_core import (
    RatioCoordinates,
    TriangularMetric,
    block_diag,
    cholesky_canonical,
    from_ratio_coords,
    inverse,
    scale,
    to_ratio_coords,
    volume,
)
from .solver import (
    CriticalPoint,
    Normalization,
    SolverOptions,
    multistart,
    newton_solve,
    normalize,
    residual,
    run_multistart,
    verify_against_reference,
)

__version__ = "0.1.0"

__all__ = [
    "CapacityError",
    "CriticalPoint",
    "CurvatureReport",
    "DegenerateMetricError",
    "DomainError",
    "EMHS_LOWER",
    "IsometryClass",
    "LedgerObataError",
    "Normalization",
    "PartitionSummary",
    "RatioCoordinates",
    "ReferenceUnavailableError",
    "SolverOptions",
    "TriangularMetric",
    "block_diag",
    "bounds",
    "canonical_form",
    "cholesky_canonical",
    "classify",
    "curvature_report",
    "einstein_constant",
    "enumerate_compositions",
    "enumerate_partitions",
    "from_ratio_coords",
    "gradient_ratio",
    "hat",
    "inverse",
    "multistart",
    "newton_solve",
    "normalize",
    "orbit_group",
    "partition_count",
    "residual",
    "routine_critical_points",
    "routine_from_partition",
    "run_multistart",
    "scalar_curvature_general",
    "scalar_curvature_triangular",
    "scale",
    "standard_einstein_matrix",
    "standard_matrix",
    "to_ratio_coords",
    "verify_against_reference",
    "volume",
]
