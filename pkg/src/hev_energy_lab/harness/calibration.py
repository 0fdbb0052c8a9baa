"""End-to-end calibration run: truth, feature ranking, correction training, model comparison."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import pandas as pd

from hev_energy_lab.calibrate.correction import (
    CorrectionModel,
    TrainedCorrection,
    TrainingSettings,
    fit_static_correction,
    fuel_model_comparison,
    train_coolant_correction,
    train_fuel_correction,
)
from hev_energy_lab.calibrate.dataset import FUEL_TARGET, CorrectionDataset
from hev_energy_lab.calibrate.features import (
    FUEL_POOL,
    REFERENCE_FUEL_FEATURES,
    BoostingConfig,
    ImportanceResult,
    boosted_importance,
    correlation_matrix,
    select_features,
)
from hev_energy_lab.calibrate.truth import TruthGeneratorSpec, generate_truth
from hev_energy_lab.constants import FuelAccounting, ModelArch
from hev_energy_lab.cycle.drive_cycle import load_cycle
from hev_energy_lab.errors import TrainingDivergedError
from hev_energy_lab.harness.registry import plant_for_config
from hev_energy_lab.harness.state import RunConfig
from hev_energy_lab.powertrain.plant import PowerCorrectionTable

LOGGER = logging.getLogger(__name__)

DEFAULT_CALIBRATION_CYCLE = "nedc"
DEFAULT_ARCHS = (ModelArch.RNN, ModelArch.LSTM, ModelArch.MLP)


@dataclass
class CalibrationResult:
    dataset: CorrectionDataset
    importance: ImportanceResult
    selected: list[str]
    fuel_features: tuple[str, ...]
    comparison: pd.DataFrame
    coolant: TrainedCorrection | None = None
    fuel_models: dict[ModelArch, TrainedCorrection] = field(default_factory=dict)
    static_correction: PowerCorrectionTable | None = None

    def save_models(self, directory: str | Path) -> dict[str, Path]:
        target = Path(directory)
        written = {}
        if self.coolant is not None:
            written["coolant"] = self.coolant.model.save(target / "coolant_lstm.json")
        for arch, trained in self.fuel_models.items():
            written[f"fuel_{arch.value}"] = trained.model.save(target / f"fuel_{arch.value}.json")
        return written


def calibration_pipeline(
    config: RunConfig,
    spec: TruthGeneratorSpec | None = None,
    settings: TrainingSettings | None = None,
    archs: tuple[ModelArch, ...] = DEFAULT_ARCHS,
    cycle_name: str | None = None,
    use_selected_features: bool = False,
    boosting: BoostingConfig | None = None,
) -> CalibrationResult:
    """Dynamic, quasi-static, averaged and corrected fuel models scored on held-out data.

    The fuel models use the reference six-feature set unless ``use_selected_features``
    asks for the set chosen by boosted importance plus correlation pruning.
    """

    settings = settings or TrainingSettings(seed=config.seed)
    name = cycle_name or (config.cycle if config.cycle != "urban300" else DEFAULT_CALIBRATION_CYCLE)
    cycle = load_cycle(name, config.dt)
    plant = plant_for_config(config.model_copy(update={"fuel_model": FuelAccounting.AVERAGED}))
    trace = generate_truth(cycle, plant, spec or TruthGeneratorSpec(seed=config.seed), soc_init=config.soc_init)
    dataset = CorrectionDataset.from_truth(trace, window=config.window_m)

    engine_on = dataset.frame[dataset.frame["engine_on"].astype(bool)]
    importance = boosted_importance(engine_on[list(FUEL_POOL)], engine_on[FUEL_TARGET].to_numpy(), config=boosting)
    corr = correlation_matrix(engine_on, FUEL_POOL)
    selected = select_features(importance, corr, k_top=8)
    LOGGER.info("Feature ranking: %s; selected %s", importance.ranked()[:6], selected)
    fuel_features = tuple(selected) if use_selected_features else REFERENCE_FUEL_FEATURES

    coolant = None
    try:
        coolant = train_coolant_correction(dataset, settings=settings)
    except TrainingDivergedError as exc:
        LOGGER.error("Coolant correction aborted: %s", exc)

    fuel_models: dict[ModelArch, TrainedCorrection] = {}
    aborted: list[str] = []
    for arch in archs:
        try:
            fuel_models[arch] = train_fuel_correction(dataset, fuel_features, arch, settings)
        except TrainingDivergedError as exc:
            LOGGER.error("%s fuel correction aborted: %s", arch.value, exc)
            aborted.append(arch.value)

    comparison = fuel_model_comparison(
        dataset,
        {f"{arch.value}-corrected": trained.model for arch, trained in fuel_models.items()},
        settings.holdout,
    )
    for label in aborted:
        comparison.loc[len(comparison)] = [f"{label}-corrected", np.nan, np.nan, np.nan]

    static = None
    lstm: CorrectionModel | None = fuel_models[ModelArch.LSTM].model if ModelArch.LSTM in fuel_models else None
    if lstm is not None:
        static = fit_static_correction(lstm, dataset)
    return CalibrationResult(
        dataset=dataset,
        importance=importance,
        selected=selected,
        fuel_features=fuel_features,
        comparison=comparison,
        coolant=coolant,
        fuel_models=fuel_models,
        static_correction=static,
    )
