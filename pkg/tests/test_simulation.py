"""
Tests the simulation scenarios, the oracle and the Monte Carlo replicate studies
"""

import logging
import os

import numpy as np
import pytest

from rc_gps.exceptions import ConfigError
from rc_gps.simulation import (
    ALL_ARMS,
    REFERENCE_ORACLE_ATE,
    OracleAte,
    ScenarioConfig,
    compare_reference_oracle,
    generate_scenario,
    is_default_scenario,
    oracle_ate,
    run_replicates,
    run_sensitivity,
    simulate_rows,
)
from rc_gps.simulation.ReplicateSummary import SUMMARY_HEADER
from rc_gps.tabular import ColumnRole


@pytest.fixture(scope="module")
def small_oracle(small_scenario):
    return oracle_ate(small_scenario, n_rows=100_000, seed=1)


def test_generate_scenario(small_scenario) -> None:
    main, validation = generate_scenario(small_scenario, seed=4)
    assert main.n_rows == 1000
    assert validation.n_rows == 300
    np.testing.assert_array_equal(validation.column("X"), main.column("X")[:300])
    assert main.role_columns(ColumnRole.CONFOUNDER) == ("C1", "C2", "C3", "C4", "C5", "C6")
    assert main.role_column(ColumnRole.ERROR_PRONE_EXPOSURE) == "W"
    # D1 is C1
    np.testing.assert_array_equal(main.column("D1"), main.column("C1"))
    assert set(np.unique(main.column("C4"))) <= {-2.0, -1.0, 0.0, 1.0, 2.0}


def test_simulate_rows_is_deterministic(small_scenario) -> None:
    first = simulate_rows(small_scenario, 50, seed=5)
    second = simulate_rows(small_scenario, 50, seed=5)
    for name, values in first.items():
        np.testing.assert_array_equal(values, second[name])
    assert not np.array_equal(first["Y"], simulate_rows(small_scenario, 50, seed=6)["Y"])


def test_default_exposure_correlation() -> None:
    columns = simulate_rows(ScenarioConfig(), 200_000, seed=1)
    assert np.corrcoef(columns["X"], columns["W"])[0, 1] == pytest.approx(0.85, abs=0.02)


def test_weak_correlation_preset() -> None:
    default = simulate_rows(ScenarioConfig(), 50_000, seed=2)
    weak = simulate_rows(ScenarioConfig.preset("weak_correlation"), 50_000, seed=2)
    assert np.corrcoef(weak["X"], weak["W"])[0, 1] < np.corrcoef(default["X"], default["W"])[0, 1]


def test_oracle(small_oracle) -> None:
    assert len(small_oracle.consecutive) == 2
    assert all(value > 0 for value in small_oracle.consecutive)
    assert small_oracle.ate(3, 1) == pytest.approx(small_oracle.ate(3, 2) + small_oracle.ate(2, 1))
    assert small_oracle.ate(1, 2) == pytest.approx(-small_oracle.ate(2, 1))
    assert small_oracle.se(2, 1) > 0
    assert len(small_oracle.to_dict()["ate"]) == 6


def _oracle(ate_21: float, ate_32: float) -> OracleAte:
    return OracleAte({1: 0.0, 2: ate_21, 3: ate_21 + ate_32}, {}, 10**6)


def test_reference_oracle_warning(caplog) -> None:
    with caplog.at_level(logging.WARNING, logger="rc_gps.simulation.scenario"):
        reference = compare_reference_oracle(ScenarioConfig(), _oracle(21.0, 20.2))
    assert reference["within_tolerance"] is False
    assert reference["reference_ate"] == list(REFERENCE_ORACLE_ATE)
    assert reference["difference"][0] == pytest.approx(21.0 - 22.56)
    messages = [record.getMessage() for record in caplog.records if record.levelno == logging.WARNING]
    assert len(messages) == 1
    assert "21.0000, 20.2000" in messages[0]
    assert "22.56, 21.50" in messages[0]


def test_reference_oracle_within_tolerance(caplog) -> None:
    with caplog.at_level(logging.WARNING, logger="rc_gps.simulation.scenario"):
        reference = compare_reference_oracle(ScenarioConfig(n_main=100, seed=3), _oracle(22.0, 21.9))
    assert reference["within_tolerance"] is True
    assert not [record for record in caplog.records if record.levelno == logging.WARNING]


def test_reference_oracle_only_for_default_scenario() -> None:
    assert is_default_scenario(ScenarioConfig.preset("default", n_main=100, n_replicates=5))
    assert not is_default_scenario(ScenarioConfig.preset("small_effect"))
    assert compare_reference_oracle(ScenarioConfig.preset("small_effect"), _oracle(1.0, 1.0)) is None


def test_oracle_with_empty_category() -> None:
    cfg = ScenarioConfig(cutoffs=(1000.0, 2000.0))
    with pytest.raises(ConfigError) as excinfo:
        oracle_ate(cfg, n_rows=1000, seed=0)
    assert excinfo.value.field_path == "cutoffs"


def test_presets() -> None:
    assert len(ScenarioConfig.presets()) == 7
    assert ScenarioConfig.preset("small_effect").beta1 == 0.5
    assert ScenarioConfig.preset("quadratic", n_main=100).n_main == 100
    with pytest.raises(ConfigError):
        ScenarioConfig.preset("no_such_setting")


def test_scenario_from_dict() -> None:
    cfg = ScenarioConfig.from_dict({"preset": "large_outcome_confounding", "n_main": 500, "n_validation": 100})
    assert cfg.beta2 == (15.0, 10.0, 5.0, 20.0, 10.0, 5.0)
    assert cfg.n_main == 500
    assert cfg.to_dict()["cutoffs"] == [-5.0, 15.0]


@pytest.mark.parametrize(
    ("values", "field_path"),
    [
        ({"preset": "no_such_setting"}, "scenario.preset"),
        ({"n_main": 100, "n_validation": 200}, "scenario.n_validation"),
        ({"cutoffs": [15, -5]}, "scenario.cutoffs"),
        ({"tau": [1.0, 2.0]}, "scenario.tau"),
        ({"w_noise_sd": -1.0}, "scenario.w_noise_sd"),
        ({"n_main": 10.5}, "scenario.n_main"),
    ],
)
def test_scenario_config_errors(values, field_path) -> None:
    with pytest.raises(ConfigError) as excinfo:
        ScenarioConfig.from_dict(values)
    assert excinfo.value.field_path == field_path


def test_run_replicates(small_scenario, small_oracle, tmp_path) -> None:
    summary = run_replicates(
        small_scenario, methods=["subclassification", "iptw"], oracle=small_oracle, n_workers=1
    )
    assert len(summary.rows) == len(ALL_ARMS) * 2 * 2
    assert len(summary.raw) == 4 * len(ALL_ARMS) * 2 * 2
    assert summary.failures == []
    row = summary.get("rc_with_covariates", "iptw", 2, 1)
    assert row.n_success == 4
    assert row.oracle == pytest.approx(small_oracle.ate(2, 1))
    assert row.bias == pytest.approx(row.mean - row.oracle)
    assert row.coverage is None

    path = os.path.join(tmp_path, "summary.csv")
    summary.to_csv(path)
    with open(path, encoding="utf-8") as fIn:
        lines = fIn.read().splitlines()
    assert lines[0] == ",".join(SUMMARY_HEADER)
    assert len(lines) == 1 + len(summary.rows)


def test_replicates_do_not_depend_on_run_length(small_scenario, small_oracle) -> None:
    arms = ["error_prone"]
    longer = run_replicates(small_scenario, arms=arms, n_replicates=3, oracle=small_oracle, n_workers=1)
    shorter = run_replicates(small_scenario, arms=arms, n_replicates=2, oracle=small_oracle, n_workers=1)
    assert shorter.raw == [entry for entry in longer.raw if entry["replicate"] <= 2]


def test_replicates_with_bootstrap_coverage(small_scenario, small_oracle) -> None:
    summary = run_replicates(
        small_scenario,
        methods=["iptw"],
        arms=["error_free"],
        n_replicates=2,
        bootstrap_replicates=3,
        oracle=small_oracle,
        n_workers=1,
    )
    for row in summary.rows:
        assert 0.0 <= row.coverage <= 1.0
    assert all(entry["ci_lower"] < entry["estimate"] < entry["ci_upper"] for entry in summary.raw)


def test_run_sensitivity(small_scenario, small_oracle) -> None:
    summary = run_sensitivity(
        small_scenario, method="iptw", deltas=(0.0, 0.5), oracle=small_oracle, n_replicates=3, n_workers=1
    )
    assert len(summary.rows) == 4
    assert {row.arm for row in summary.rows} == {"rc_with_covariates"}
    assert summary.get("rc_with_covariates", "iptw", 2, 1, delta=0.5).n_success == 3
    assert {entry["delta"] for entry in summary.raw} == {0.0, 0.5}
    with pytest.raises(ValueError):
        run_sensitivity(small_scenario, deltas=(-0.1,), oracle=small_oracle)


METHODS = ("subclassification", "iptw", "matching")


@pytest.fixture(scope="module")
def default_study():
    cfg = ScenarioConfig(n_replicates=200, seed=2024)
    return run_replicates(cfg, methods=METHODS, arms=ALL_ARMS)


@pytest.mark.slow
@pytest.mark.parametrize("method", METHODS)
@pytest.mark.parametrize("x, expected", [(1, -17.0), (2, -15.0)])
def test_error_prone_percent_bias(default_study, method, x, expected) -> None:
    row = default_study.get("error_prone", method, x + 1, x)
    assert row.percent_bias == pytest.approx(expected, abs=5.0)


@pytest.mark.slow
@pytest.mark.parametrize("method", METHODS)
@pytest.mark.parametrize("x", [1, 2])
def test_calibration_with_covariates_is_unbiased(default_study, method, x) -> None:
    row = default_study.get("rc_with_covariates", method, x + 1, x)
    assert abs(row.percent_bias) < 2.0
    assert row.n_success == 200


@pytest.mark.slow
@pytest.mark.parametrize("method", METHODS)
@pytest.mark.parametrize("x", [1, 2])
def test_arm_bias_ordering(default_study, method, x) -> None:
    bias = {arm: abs(default_study.get(arm, method, x + 1, x).percent_bias) for arm in ALL_ARMS}
    assert bias["error_free"] < 2.0
    # calibrating without D sits between no calibration and calibrating with D
    assert bias["rc_with_covariates"] <= bias["rc_no_covariates"] <= bias["error_prone"]


@pytest.mark.slow
def test_default_oracle_matches_reference_or_warns(caplog) -> None:
    with caplog.at_level(logging.WARNING, logger="rc_gps.simulation.scenario"):
        oracle = oracle_ate(ScenarioConfig(), n_rows=10**6)
    warned = any("reference values" in record.getMessage() for record in caplog.records)
    assert oracle.reference is not None
    assert warned != oracle.reference["within_tolerance"]
    if not warned:
        np.testing.assert_allclose(oracle.consecutive, REFERENCE_ORACLE_ATE, atol=1.5)


@pytest.mark.slow
@pytest.mark.parametrize("method", METHODS)
def test_sensitivity_sd_grows_with_delta(method) -> None:
    cfg = ScenarioConfig(n_replicates=200, seed=7)
    deltas = (0.0, 0.1, 0.2, 0.3, 0.5)
    summary = run_sensitivity(cfg, method=method, deltas=deltas)
    for x in (1, 2):
        sds = [summary.get("rc_with_covariates", method, x + 1, x, delta=delta).sd for delta in deltas]
        assert all(later >= earlier for earlier, later in zip(sds, sds[1:])), sds


@pytest.mark.slow
@pytest.mark.parametrize(
    "method, low, high", [("subclassification", 0.91, 0.99), ("iptw", 0.91, 0.99), ("matching", 0.89, 1.0)]
)
def test_bootstrap_coverage(method, low, high) -> None:
    cfg = ScenarioConfig(n_replicates=200, seed=99)
    summary = run_replicates(cfg, methods=[method], arms=["rc_with_covariates"], bootstrap_replicates=100)
    for x in (1, 2):
        coverage = summary.get("rc_with_covariates", method, x + 1, x).coverage
        assert low <= coverage <= high
