from hev_energy_lab.calibrate.correction import (
    CorrectionModel,
    ErrorMetrics,
    TrainedCorrection,
    TrainingSettings,
    corrected_fuel,
    error_metrics,
    evaluate_model,
    fit_static_correction,
    fuel_model_comparison,
    train_coolant_correction,
    train_correction,
    train_fuel_correction,
)
from hev_energy_lab.calibrate.dataset import CorrectionDataset, WindowSet, averaged_fuel
from hev_energy_lab.calibrate.features import (
    COOLANT_FEATURES,
    FUEL_POOL,
    REFERENCE_FUEL_FEATURES,
    BoostingConfig,
    CorrelationMatrix,
    ImportanceResult,
    boosted_importance,
    correlation_matrix,
    pearson,
    select_features,
)
from hev_energy_lab.calibrate.truth import TruthGeneratorSpec, TruthTrace, generate_truth

__all__ = [
    "COOLANT_FEATURES",
    "FUEL_POOL",
    "REFERENCE_FUEL_FEATURES",
    "BoostingConfig",
    "CorrectionDataset",
    "CorrectionModel",
    "CorrelationMatrix",
    "ErrorMetrics",
    "ImportanceResult",
    "TrainedCorrection",
    "TrainingSettings",
    "TruthGeneratorSpec",
    "TruthTrace",
    "WindowSet",
    "averaged_fuel",
    "boosted_importance",
    "corrected_fuel",
    "correlation_matrix",
    "error_metrics",
    "evaluate_model",
    "fit_static_correction",
    "fuel_model_comparison",
    "generate_truth",
    "pearson",
    "select_features",
    "train_coolant_correction",
    "train_correction",
    "train_fuel_correction",
]
