"""Generative-model bootstrap: fit a sampler to data, resample it, and
build Monte Carlo confidence regions for regression functionals."""

from .core import (
    Dataset,
    DgpSpec,
    RngStream,
    as_generator,
    dataset_from_text,
    dataset_to_text,
    format_float,
    gen_iso_data,
    gen_ols_data,
    read_csv,
    sample_beta25,
    write_csv,
)
from .estimators import (
    IsotonicFit,
    OlsFit,
    OneSidedSupportError,
    SingularDesignError,
    iso_bootstrap_fit,
    maxmin_eval,
    ols_fit,
    pava_fit,
)
from .generators import (
    FlowConfig,
    GanConfig,
    GeneratorModel,
    TrainingDivergedError,
    fit_generator,
    flow_log_density,
    load_model,
    model_from_text,
    model_to_text,
    sample,
    save_model,
)
from .inference import (
    AllTrialsInvalidError,
    CoverageReport,
    TrialConfig,
    TrialResult,
    iso_trial,
    ols_trial,
    order_quantile,
    report_to_csv,
    run_coverage,
    run_trial,
)
from .oracles import (
    ChernoffConfig,
    chernoff_limit_scale,
    chernoff_sample,
    isotonic_partition_oracle,
    ks_distance,
    w1_1d,
    w1_lp,
)

__version__ = "1.0.0"

__all__ = [
    "Dataset",
    "DgpSpec",
    "RngStream",
    "as_generator",
    "dataset_from_text",
    "dataset_to_text",
    "format_float",
    "gen_iso_data",
    "gen_ols_data",
    "read_csv",
    "sample_beta25",
    "write_csv",
    "IsotonicFit",
    "OlsFit",
    "OneSidedSupportError",
    "SingularDesignError",
    "iso_bootstrap_fit",
    "maxmin_eval",
    "ols_fit",
    "pava_fit",
    "FlowConfig",
    "GanConfig",
    "GeneratorModel",
    "TrainingDivergedError",
    "fit_generator",
    "flow_log_density",
    "load_model",
    "model_from_text",
    "model_to_text",
    "sample",
    "save_model",
    "AllTrialsInvalidError",
    "CoverageReport",
    "TrialConfig",
    "TrialResult",
    "iso_trial",
    "ols_trial",
    "order_quantile",
    "report_to_csv",
    "run_coverage",
    "run_trial",
    "ChernoffConfig",
    "chernoff_limit_scale",
    "chernoff_sample",
    "isotonic_partition_oracle",
    "ks_distance",
    "w1_1d",
    "w1_lp",
    "__version__",
]
