"""Cross-modal guided distillation: data generation, training, metrics, reporting."""

from guided_distill._core import (
    ArtifactError,
    ConfigError,
    DataError,
    IoError,
    TrainingError,
    aggregate_run,
    auroc,
    balanced_accuracy,
    default_generator_spec,
    delta_percent,
    generate,
    load_dataset,
    make_preset,
    mcnemar_test,
    micro_f1,
    preset_names,
    render_delta_percent,
    run_experiment,
    save_dataset,
    seven_point_infer,
    significance,
)

__version__ = "0.1.0"

__all__ = [
    "ArtifactError",
    "ConfigError",
    "DataError",
    "IoError",
    "TrainingError",
    "aggregate_run",
    "auroc",
    "balanced_accuracy",
    "default_generator_spec",
    "delta_percent",
    "generate",
    "load_dataset",
    "make_preset",
    "mcnemar_test",
    "micro_f1",
    "preset_names",
    "render_delta_percent",
    "run_experiment",
    "save_dataset",
    "seven_point_infer",
    "significance",
]
