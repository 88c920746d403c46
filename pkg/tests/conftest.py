import os
from typing import Tuple

import pytest

from rc_gps.simulation import ScenarioConfig, generate_scenario
from rc_gps.tabular import TabularDataset, write_csv


@pytest.fixture(scope="session")
def small_scenario() -> ScenarioConfig:
    return ScenarioConfig.preset("default", n_main=1000, n_validation=300, n_replicates=4, seed=11)


@pytest.fixture(scope="session")
def scenario_studies(small_scenario: ScenarioConfig) -> Tuple[TabularDataset, TabularDataset]:
    return generate_scenario(small_scenario, seed=11)


@pytest.fixture()
def study_files(tmp_path, scenario_studies) -> Tuple[str, str]:
    """The simulated main and validation studies written as CSV files; returns their paths."""
    main, validation = scenario_studies
    main_path = os.path.join(tmp_path, "main.csv")
    validation_path = os.path.join(tmp_path, "validation.csv")
    write_csv(main.select_roles(["confounder", "calibration_covariate", "error_prone_exposure", "outcome"]), main_path)
    write_csv(validation, validation_path)
    return main_path, validation_path
