"""
Tests ATE contrasts and the GLM outcome models fitted on the GPS designs
"""

import os

import numpy as np
import pytest
import statsmodels.api as sm

from rc_gps.estimators import (
    EstimationMethod,
    IPTWEstimator,
    MatchingEstimator,
    PotentialOutcomeEstimates,
    SubclassificationEstimator,
)
from rc_gps.exceptions import InvalidDataError, ScaleUnavailableError
from rc_gps.gps import GpsMatrix
from rc_gps.models import Link, OutcomeModel
from rc_gps.outcome import ContrastScale, ate_contrasts, default_scales, fit_outcome_glm
from rc_gps.tabular import TabularDataset


def _estimates(means) -> PotentialOutcomeEstimates:
    return PotentialOutcomeEstimates(EstimationMethod.IPTW, means, list(range(1, len(means) + 1)))


def test_contrasts_all_pairs() -> None:
    table = ate_contrasts(_estimates([2.0, 3.0, 6.0]))
    assert len(table) == 12
    assert table.get(2, 1).estimate == pytest.approx(1.0)
    assert table.get(3, 1, ContrastScale.RATIO).estimate == pytest.approx(3.0)
    for row in table:
        mirrored = table.get(row.x, row.x_prime, row.scale)
        if row.scale == ContrastScale.DIFFERENCE:
            assert mirrored.estimate == pytest.approx(-row.estimate)
        else:
            assert mirrored.estimate == pytest.approx(1.0 / row.estimate)


def test_contrasts_against_reference() -> None:
    table = ate_contrasts(_estimates([2.0, 3.0, 6.0]), scales=["difference"], reference=1)
    assert [(row.x_prime, row.x) for row in table] == [(2, 1), (3, 1)]
    with pytest.raises(KeyError):
        table.get(1, 2)
    with pytest.raises(ValueError):
        ate_contrasts(_estimates([2.0, 3.0]), reference=4)


def test_ratio_needs_positive_means() -> None:
    estimates = _estimates([0.0, 3.0])
    assert ate_contrasts(estimates, scales=["difference"]).get(2, 1).estimate == 3.0
    with pytest.raises(ScaleUnavailableError):
        ate_contrasts(estimates, scales=["ratio"])


def test_ate_table_files(tmp_path) -> None:
    table = ate_contrasts(_estimates([2.0, 4.0]))
    path = os.path.join(tmp_path, "ate.csv")
    table.to_csv(path)
    with open(path, encoding="utf-8") as fIn:
        lines = fIn.read().splitlines()
    assert lines[0] == "x_prime,x,scale,estimate,se,ci_lower,ci_upper,method"
    assert "2,1,difference,2,,,,iptw" in lines
    assert "1,2,ratio,0.5,,,,iptw" in lines
    with pytest.raises(ValueError):
        table.replicates_to_csv(os.path.join(tmp_path, "replicates.csv"))


def test_identity_fit_matches_statsmodels_wls() -> None:
    rng = np.random.default_rng(0)
    xc = rng.integers(1, 4, size=150)
    C = rng.normal(size=(150, 2))
    y = 1.0 + 0.5 * (xc == 2) - 1.0 * (xc == 3) + C @ [0.3, -0.2] + rng.normal(size=150)
    weights = rng.uniform(0.5, 3.0, size=150)

    model = OutcomeModel(include_confounders=True).fit(y, xc, weights=weights, C=C, confounder_names=["a", "b"])
    design = np.column_stack([np.ones(150), xc == 2, xc == 3, C]).astype(float)
    reference = sm.WLS(y, design, weights=weights).fit()
    np.testing.assert_allclose(model.coef, reference.params, rtol=1e-8)
    assert model.coef_names == ["intercept", "category_2", "category_3", "a", "b"]


def test_log_link_matches_statsmodels_poisson() -> None:
    rng = np.random.default_rng(1)
    xc = rng.integers(1, 3, size=300)
    person_time = rng.uniform(1.0, 5.0, size=300)
    strata = rng.integers(0, 3, size=300).astype(float)
    y = rng.poisson(person_time * np.exp(-1.0 + 0.4 * (xc == 2) + 0.2 * strata)).astype(float)
    weights = rng.uniform(0.5, 2.0, size=300)

    model = OutcomeModel(link=Link.LOG).fit(y, xc, weights=weights, person_time=person_time, strata=strata)
    design = np.column_stack([np.ones(300), xc == 2, strata == 1, strata == 2]).astype(float)
    reference = sm.GLM(
        y, design, family=sm.families.Poisson(), offset=np.log(person_time), var_weights=weights
    ).fit(tol=1e-12)
    np.testing.assert_allclose(model.coef, reference.params, rtol=1e-6, atol=1e-8)
    assert model.converged


def test_log_link_rates_per_person_time() -> None:
    model = OutcomeModel(link="log").fit(
        np.array([1.0, 2.0, 3.0, 5.0]), np.array([1, 1, 2, 2]), person_time=np.array([1.0, 1.0, 2.0, 2.0])
    )
    assert model.standardized_mean(1, 4) == pytest.approx(1.5)
    assert model.standardized_mean(2, 4) == pytest.approx(2.0)


def test_nonpositive_person_time() -> None:
    with pytest.raises(InvalidDataError):
        OutcomeModel(link="log").fit(np.ones(4), np.array([1, 1, 2, 2]), person_time=np.array([1.0, 0.0, 1.0, 1.0]))


def _design_instance():
    rng = np.random.default_rng(2)
    probs = rng.dirichlet([4.0, 4.0, 4.0], size=240)
    xc = np.array([rng.choice(3, p=row) + 1 for row in probs])
    y = rng.normal(size=240) + xc
    dataset = TabularDataset({"y": y, "xc": xc}, roles={"outcome": "y", "categorical_exposure": "xc"})
    return dataset, y, xc, GpsMatrix(probs)


@pytest.mark.parametrize(
    "estimator",
    [SubclassificationEstimator(n_subclasses=4), IPTWEstimator(hajek=True), MatchingEstimator()],
)
def test_identity_outcome_model_reproduces_estimator(estimator) -> None:
    dataset, y, xc, gps = _design_instance()
    estimates = estimator(y, xc, gps)
    model = fit_outcome_glm(dataset, estimates, OutcomeModel())
    np.testing.assert_allclose(model.potential_outcomes.means, estimates.means, rtol=1e-8)
    assert model.potential_outcomes.method == estimates.method
    if estimates.method == EstimationMethod.SUBCLASSIFICATION:
        assert len(model.components) == sum(weights.size for weights in estimates.subclasses.weights.values())


@pytest.mark.parametrize(
    "estimator",
    [SubclassificationEstimator(n_subclasses=4), IPTWEstimator(hajek=True), MatchingEstimator()],
)
def test_constant_observation_weights_change_nothing(estimator) -> None:
    dataset, y, xc, gps = _design_instance()
    estimates = estimator(y, xc, gps)
    weighted = dataset.with_column("o", np.full(y.size, 2.5), role="weight")
    model = fit_outcome_glm(weighted, estimates, OutcomeModel())
    np.testing.assert_allclose(model.potential_outcomes.means, estimates.means, rtol=1e-8)


def test_observation_weights_multiply_iptw_weights() -> None:
    dataset, y, xc, gps = _design_instance()
    estimates = IPTWEstimator()(y, xc, gps)
    observation = np.random.default_rng(5).uniform(0.2, 4.0, size=y.size)
    model = fit_outcome_glm(dataset.with_column("o", observation, role="weight"), estimates, OutcomeModel())
    combined = estimates.weights * observation
    expected = [np.average(y[xc == x], weights=combined[xc == x]) for x in (1, 2, 3)]
    np.testing.assert_allclose(model.potential_outcomes.means, expected, rtol=1e-8)


def test_outcome_glm_rejects_mismatched_rows() -> None:
    dataset, y, xc, gps = _design_instance()
    estimates = IPTWEstimator()(y, xc, gps)
    with pytest.raises(InvalidDataError):
        fit_outcome_glm(dataset.subset(np.arange(100)), estimates)


def test_default_scales() -> None:
    assert default_scales("identity") == [ContrastScale.DIFFERENCE]
    assert default_scales(Link.LOG) == [ContrastScale.RATIO]
