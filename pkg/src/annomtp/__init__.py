"""Resampling-based multiple testing of associations between fixed
annotation profiles and estimated gene-parameter profiles."""

__version__ = "0.1.0"

from .association import (
    AnnotationMatrix,
    AssociationResult,
    ParameterProfile,
    associate,
    chisq2x2_association,
    marginal_causal_association,
    pearson_association,
    sum_association,
    welch_t_association,
)
from .dag import (
    DirectAnnotations,
    OntologyDag,
    TermRecord,
    assemble_matrix,
    propagate_true_path,
    validate_dag,
)
from .engine import (
    ConfusionCounts,
    ErrorRates,
    MtpResult,
    NullDistributionEstimate,
    StatisticComputer,
    confusion,
    difference_statistics,
    error_rates,
    maxt_adjusted_p,
    maxt_cutoff,
    rejection_set,
    resample_null,
    single_step_maxt,
    t_statistics,
)
from .profiles import (
    GroupSummary,
    SampleData,
    binary_profile_by_adjp,
    binary_profile_top_count,
    collapse_probes,
    filter_genes,
    group_summary,
    lambda_d,
    lambda_t,
)
from .scenarios import (
    DeEstimatorConfig,
    ScenarioConfig,
    ScenarioReport,
    compare_scenarios,
    gene_level_de_test,
    run_scenario,
)
from .simulate import SimulationSpec, run_simulation

__all__ = [
    "AnnotationMatrix",
    "AssociationResult",
    "ConfusionCounts",
    "DeEstimatorConfig",
    "DirectAnnotations",
    "ErrorRates",
    "GroupSummary",
    "MtpResult",
    "NullDistributionEstimate",
    "OntologyDag",
    "ParameterProfile",
    "SampleData",
    "ScenarioConfig",
    "ScenarioReport",
    "SimulationSpec",
    "StatisticComputer",
    "TermRecord",
    "assemble_matrix",
    "associate",
    "binary_profile_by_adjp",
    "binary_profile_top_count",
    "chisq2x2_association",
    "collapse_probes",
    "compare_scenarios",
    "confusion",
    "difference_statistics",
    "error_rates",
    "filter_genes",
    "gene_level_de_test",
    "group_summary",
    "lambda_d",
    "lambda_t",
    "marginal_causal_association",
    "maxt_adjusted_p",
    "maxt_cutoff",
    "pearson_association",
    "propagate_true_path",
    "rejection_set",
    "resample_null",
    "run_scenario",
    "run_simulation",
    "single_step_maxt",
    "sum_association",
    "t_statistics",
    "validate_dag",
    "welch_t_association",
]
