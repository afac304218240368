"""Directional-collapse geometry of labeled embeddings.

Computes CDNV / directional CDNV / fourth-moment statistics of labeled
embedding sets, evaluates finite-shot NCC error certificates, and verifies
them against seeded Monte Carlo few-shot experiments and exact synthetic
distributions.
"""

__version__ = "0.1.0"

from .dataset import (
    DatasetError,
    EmbeddingDataset,
    FormatError,
    Labeling,
    ValidationReport,
    load_embeddings,
    validate_dataset,
    write_embeddings,
)
from .geometry import (
    ClassStats,
    CdnvAverages,
    DecompositionReport,
    DegeneratePairError,
    PairGeometry,
    cdnv_averages,
    class_stats,
    directional_variance,
    pair_geometry,
    variance_decomposition,
)
from .bounds import (
    BoundValue,
    ExpectedMargin,
    MulticlassBound,
    NonpositiveMarginError,
    baseline_bound_prior,
    expected_margin,
    multiclass_bound,
    pairwise_bound_asymptotic,
    pairwise_bound_equal,
    pairwise_bound_generic,
    pairwise_bound_optimized,
)
from .fewshot import (
    FewShotConfig,
    FewShotEstimate,
    SweepReport,
    SweepRow,
    bound_vs_error_sweep,
    ncc_classify,
    run_fewshot_estimate,
)
from .synthetic import (
    FactorModel,
    FactorModelSpec,
    GaussianPairModel,
    GaussianPairSpec,
    TwoPointSample,
    TwoPointSpec,
    sample_factor_model,
    sample_gaussian_pair,
    two_point_extremizer,
    two_point_ncc_error,
)
from .ortho import (
    DecisionAxisSet,
    OrthoEntry,
    OrthoReport,
    cross_task_cosines,
    decision_axes,
    orthogonality_bound,
    verify_proposition,
)
