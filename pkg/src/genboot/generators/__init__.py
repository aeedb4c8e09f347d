"""Generator fitting and sampling: empirical, smoothed, GAN, and flow
variants behind one GeneratorModel interface."""

from .empirical import EmpiricalPayload, quantile_map, sample_empirical
from .smoothed import SmoothedPayload, silverman_bandwidth
from .gan import GanConfig, GanPayload, TrainingDivergedError, gradient_penalty
from .flow import (
    FlowConfig,
    FlowPayload,
    FlowStep,
    flow_forward,
    flow_inverse,
    flow_params,
    init_flow,
    sample_flow,
)
from .model import (
    GeneratorModel,
    fit_empirical,
    fit_smoothed,
    fit_gan,
    fit_flow,
    fit_generator,
    sample,
    sample_smoothed,
    flow_log_density,
    model_to_text,
    model_from_text,
    save_model,
    load_model,
    parse_training_options,
    training_options_to_text,
    gan_config_from_options,
    flow_config_from_options,
)

__all__ = [
    "EmpiricalPayload",
    "SmoothedPayload",
    "GanConfig",
    "GanPayload",
    "FlowConfig",
    "FlowPayload",
    "FlowStep",
    "GeneratorModel",
    "TrainingDivergedError",
    "quantile_map",
    "sample_empirical",
    "silverman_bandwidth",
    "gradient_penalty",
    "flow_forward",
    "flow_inverse",
    "flow_params",
    "init_flow",
    "sample_flow",
    "fit_empirical",
    "fit_smoothed",
    "fit_gan",
    "fit_flow",
    "fit_generator",
    "sample",
    "sample_smoothed",
    "flow_log_density",
    "model_to_text",
    "model_from_text",
    "save_model",
    "load_model",
    "parse_training_options",
    "training_options_to_text",
    "gan_config_from_options",
    "flow_config_from_options",
]
