"""Memory-bounded iterative SVD and orthogonal gradient projection for
continual learning, with a small continual anomaly-scoring harness."""

from .isvd import (
    IsvdState,
    MemoryEstimate,
    absorb_block,
    estimate_memory,
    finalize,
    init_stream,
    isvd,
    residual_spectrum,
    significant_basis_direct,
)
from .linalg import (
    NumericalError,
    SignificantBasis,
    SvdResult,
    ThresholdMode,
    frobenius_norm_sq,
    k_rank_basis,
    matmul,
    orthonormality_defect,
    principal_angles,
    svd,
    transpose,
)
from .metrics import (
    MetricTable,
    UndefinedMetricError,
    a_metric,
    anomaly_map,
    auroc,
    bilinear_upsample,
    forgetting_measure,
    image_score,
)
from .projection import ProjectionState, apply_update, interference, project_orthogonal

__version__ = "0.1.0"
