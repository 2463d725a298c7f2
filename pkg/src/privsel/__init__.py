"""Differentially private top-k selection on beta-Bernoulli instances,
with the selection statistic and bounds used to probe how much privacy
the selection leaks, plus a deterministic experiment harness and CLI."""

from .attack import (
    AttackReport,
    BetaFingerprintResult,
    BoundChainReport,
    BoundParameters,
    ColumnEqualityReport,
    FingerprintCheck,
    MembershipReport,
    accuracy_lower_bound_proxy,
    check_bound_chain,
    column_equality_experiment,
    membership_experiment,
    privacy_upper_bound,
    tracing_score,
    verify_beta_fingerprinting,
    verify_fingerprinting_identity,
    z_statistic,
)
from .betadist import (
    BetaParams,
    TailBoundReport,
    anticoncentration_beta_choice,
    beta_cdf,
    beta_cdf_quadrature,
    beta_draws,
    beta_function,
    beta_moments,
    beta_pdf,
    beta_sample,
    expected_topk_sum,
    tail_lower_bound,
)
from .errors import ConfigError, InvariantError
from .harness import (
    CSV_COLUMNS,
    ExperimentConfig,
    ResultRecord,
    emit,
    records_from_json,
    render_csv,
    render_json,
    run_experiment,
    sweep,
)
from .instance import (
    ColumnMeans,
    Dataset,
    Population,
    read_dataset,
    read_population,
    resample_row,
    sample_dataset,
    sample_population,
    selection_error,
    top_k_set,
    write_dataset,
    write_population,
)
from .mechanisms import (
    MECHANISM_NAMES,
    HypothesisTestSpec,
    PrivacyBudget,
    SelectionOutput,
    composition_split,
    exp_mech_probabilities,
    exp_mech_select_one,
    gaussian_mean_release,
    gaussian_sigma,
    nonprivate_topk,
    peeling_topk,
    report_noisy_max_topk,
    run_named_mechanism,
    svt_threshold_select,
    trivial_first_k,
)
from .seeds import trial_generator
from .verifysuite import VerifyReport, render_verify_json, run_verify

__version__ = "0.1.0"

__all__ = [
    "AttackReport",
    "BetaFingerprintResult",
    "BetaParams",
    "BoundChainReport",
    "BoundParameters",
    "CSV_COLUMNS",
    "ColumnEqualityReport",
    "ColumnMeans",
    "ConfigError",
    "Dataset",
    "ExperimentConfig",
    "FingerprintCheck",
    "HypothesisTestSpec",
    "InvariantError",
    "MECHANISM_NAMES",
    "MembershipReport",
    "Population",
    "PrivacyBudget",
    "ResultRecord",
    "SelectionOutput",
    "TailBoundReport",
    "VerifyReport",
    "accuracy_lower_bound_proxy",
    "anticoncentration_beta_choice",
    "beta_cdf",
    "beta_cdf_quadrature",
    "beta_draws",
    "beta_function",
    "beta_moments",
    "beta_pdf",
    "beta_sample",
    "check_bound_chain",
    "column_equality_experiment",
    "composition_split",
    "emit",
    "exp_mech_probabilities",
    "exp_mech_select_one",
    "expected_topk_sum",
    "gaussian_mean_release",
    "gaussian_sigma",
    "membership_experiment",
    "nonprivate_topk",
    "peeling_topk",
    "privacy_upper_bound",
    "read_dataset",
    "read_population",
    "records_from_json",
    "render_csv",
    "render_json",
    "render_verify_json",
    "report_noisy_max_topk",
    "resample_row",
    "run_experiment",
    "run_named_mechanism",
    "run_verify",
    "sample_dataset",
    "sample_population",
    "selection_error",
    "svt_threshold_select",
    "sweep",
    "tail_lower_bound",
    "top_k_set",
    "tracing_score",
    "trial_generator",
    "trivial_first_k",
    "verify_beta_fingerprinting",
    "verify_fingerprinting_identity",
    "write_dataset",
    "write_population",
    "z_statistic",
]
