"""
Tests the multinomial GPS model and overlap trimming
"""

import os

import numpy as np
import pytest
import statsmodels.api as sm
from scipy.special import expit, softmax

from rc_gps.exceptions import AllTrimmedError, InvalidDataError, SchemaError, SeparationError
from rc_gps.gps import GpsMatrix, GpsModel, TrimmingStrategy, fit_multinomial, predict_gps, trim_overlap
from rc_gps.simulation import ScenarioConfig, generate_scenario
from rc_gps.tabular import CutoffSpec, TabularDataset


def _multinomial_sample(n_units: int = 600, seed: int = 1):
    rng = np.random.default_rng(seed)
    C = rng.normal(size=(n_units, 2))
    eta = np.array([[0.2, 1.0, -0.5], [-0.3, 0.4, 0.8]])
    logits = np.column_stack([np.column_stack([np.ones(n_units), C]) @ eta.T, np.zeros(n_units)])
    probs = softmax(logits, axis=1)
    xc = np.array([rng.choice(3, p=row) + 1 for row in probs])
    return C, xc


def test_softmax_of_intercepts() -> None:
    model = GpsModel(np.array([[np.log(2)], [0.0]]))
    gps = predict_gps(model, np.zeros((1, 0)))
    np.testing.assert_allclose(gps.probs, [[0.5, 0.25, 0.25]])
    assert model.reference_category == 3


def test_fit_matches_statsmodels() -> None:
    C, xc = _multinomial_sample()
    model = fit_multinomial(xc, C, confounder_names=["c1", "c2"])
    assert model.converged
    assert model.final_gradient_norm < 1e-8

    reference = sm.MNLogit(xc, sm.add_constant(C)).fit(disp=0, method="newton", maxiter=100)
    gps = model.predict(C)
    np.testing.assert_allclose(gps.probs, reference.predict(), atol=1e-6)
    assert model.log_likelihood(C, xc) == pytest.approx(reference.llf, rel=1e-8)


def test_predicted_rows_sum_to_one() -> None:
    C, xc = _multinomial_sample()
    model = fit_multinomial(xc, C)
    gps = model.predict(np.random.default_rng(5).normal(size=(50, 2)) * 3)
    np.testing.assert_allclose(gps.probs.sum(axis=1), 1.0, atol=1e-10)
    assert np.all(gps.probs > 0)


def test_maximum_likelihood() -> None:
    C, xc = _multinomial_sample(seed=2)
    model = fit_multinomial(xc, C)
    for shift in (1e-3, -1e-3):
        perturbed = GpsModel(model.eta + shift)
        assert perturbed.log_likelihood(C, xc) < model.log_likelihood(C, xc)


def test_label_permutation_equivariance() -> None:
    C, xc = _multinomial_sample(seed=3)
    relabel = np.array([0, 3, 1, 2])
    gps = fit_multinomial(xc, C).predict(C)
    permuted = fit_multinomial(relabel[xc], C).predict(C)
    for label in (1, 2, 3):
        np.testing.assert_allclose(permuted.element(relabel[label]), gps.element(label), atol=1e-6)


def test_fit_errors() -> None:
    C, xc = _multinomial_sample()
    with pytest.raises(InvalidDataError):
        fit_multinomial(np.where(xc == 3, 2, xc), C, n_categories=3)
    with pytest.raises(InvalidDataError):
        fit_multinomial(xc[:6], C[:6])
    with pytest.raises(SchemaError):
        fit_multinomial(xc, C).predict(C[:, :1])


def test_separation_and_ridge_fallback() -> None:
    rng = np.random.default_rng(4)
    xc = np.repeat([1, 2], 30)
    C = np.where(xc == 1, -1.0, 1.0) * (1.0 + rng.uniform(size=60))
    with pytest.raises(SeparationError):
        fit_multinomial(xc, C)

    model = fit_multinomial(xc, C, ridge_fallback=True)
    assert model.ridge == pytest.approx(1e-6 * 60)
    assert np.all(np.isfinite(model.eta))


def test_save_and_load(tmp_path) -> None:
    C, xc = _multinomial_sample()
    model = fit_multinomial(xc, C, confounder_names=["c1", "c2"])
    path = os.path.join(tmp_path, "gps_model.json")
    model.save(path)
    restored = GpsModel.load(path)
    np.testing.assert_array_equal(restored.eta, model.eta)
    assert restored.confounder_names == ["c1", "c2"]


def test_gps_matrix_rejects_bad_rows() -> None:
    with pytest.raises(InvalidDataError):
        GpsMatrix([[0.5, 0.6]])
    with pytest.raises(SchemaError):
        GpsMatrix([[1.0], [1.0]])


def test_own_probability() -> None:
    gps = GpsMatrix([[0.5, 0.5], [0.25, 0.75], [0.2, 0.8]])
    np.testing.assert_allclose(gps.own_probability([1, 2, 2]), [0.5, 0.75, 0.8])


# Three groups; unit 6 has p(1|c) = 0.01 while every other group has minimum 0.05.
TOY_GPS = np.array(
    [
        [0.05, 0.45, 0.50],
        [0.50, 0.25, 0.25],
        [0.05, 0.45, 0.50],
        [0.50, 0.25, 0.25],
        [0.05, 0.45, 0.50],
        [0.50, 0.25, 0.25],
        [0.01, 0.45, 0.54],
    ]
)
TOY_XC = np.array([1, 1, 2, 2, 3, 3, 3])


def test_trim_removes_unit_below_common_range() -> None:
    dataset = TabularDataset({"y": np.arange(7.0)}, roles={"outcome": "y"})
    result = trim_overlap(dataset, GpsMatrix(TOY_GPS), TOY_XC)
    np.testing.assert_array_equal(result.removed_index, [6])
    np.testing.assert_array_equal(result.kept_index, np.arange(6))
    assert result.kept_fraction == pytest.approx(6 / 7)
    np.testing.assert_array_equal(result.dataset.column("y"), np.arange(6.0))
    assert result.ranges[0] == pytest.approx((0.05, 0.5))


def test_trim_identical_groups_keeps_everyone() -> None:
    gps = GpsMatrix(np.tile([[0.2, 0.3, 0.5], [0.6, 0.2, 0.2]], (3, 1)))
    result = trim_overlap(None, gps, [1, 1, 2, 2, 3, 3])
    assert result.kept_fraction == 1.0
    assert result.removed_index.size == 0


@pytest.mark.parametrize("strategy", [TrimmingStrategy.RANGE_INTERSECTION, TrimmingStrategy.QUANTILE])
def test_trim_with_recorded_ranges_is_idempotent(strategy) -> None:
    C, xc = _multinomial_sample(seed=6)
    gps = fit_multinomial(xc, C).predict(C)
    once = trim_overlap(None, gps, xc, strategy=strategy, alpha=0.05)
    assert once.kept_fraction < 1.0
    twice = trim_overlap(None, once.gps, once.xc, strategy=strategy, ranges=once.ranges)
    assert twice.kept_fraction == 1.0
    np.testing.assert_array_equal(twice.gps.probs, once.gps.probs)


def test_trim_none_keeps_everyone() -> None:
    result = trim_overlap(None, GpsMatrix(TOY_GPS), TOY_XC, strategy=TrimmingStrategy.NONE)
    assert result.kept_fraction == 1.0


def test_trim_without_overlap() -> None:
    gps = GpsMatrix([[0.9, 0.1], [0.8, 0.2], [0.3, 0.7], [0.1, 0.9]])
    with pytest.raises(AllTrimmedError):
        trim_overlap(None, gps, [1, 1, 2, 2])


@pytest.mark.parametrize("seed", range(50))
def test_binary_fit_matches_logit(seed: int) -> None:
    rng = np.random.default_rng(1000 + seed)
    C = rng.normal(size=(300, 2))
    beta = rng.uniform(-1.0, 1.0, size=3)
    xc = np.where(rng.uniform(size=300) < expit(beta[0] + C @ beta[1:]), 1, 2)

    model = fit_multinomial(xc, C)
    reference = sm.Logit((xc == 1).astype(float), sm.add_constant(C)).fit(disp=0, method="newton", maxiter=100)
    np.testing.assert_allclose(model.eta[0], reference.params, atol=1e-6)
    assert model.log_likelihood(C, xc) == pytest.approx(reference.llf, rel=1e-8)


@pytest.mark.parametrize("seed", [0, 1, 2])
def test_iterated_trim_applied_twice_equals_once(seed: int) -> None:
    """Trimming the output of the iterated range intersection again, with bounds recomputed, removes nothing."""
    cfg = ScenarioConfig.preset("default")
    main, _ = generate_scenario(cfg, seed=seed)
    C = main.role_matrix("confounder")
    xc = CutoffSpec(cfg.cutoffs).categorize(main.column("X"))
    gps = fit_multinomial(xc, C).predict(C)

    strategy = TrimmingStrategy.ITERATED_RANGE_INTERSECTION
    once = trim_overlap(main, gps, xc, strategy=strategy)
    twice = trim_overlap(once.dataset, once.gps, once.xc, strategy=strategy)
    assert twice.removed_index.size == 0
    np.testing.assert_array_equal(twice.gps.probs, once.gps.probs)
    np.testing.assert_array_equal(twice.dataset.column("Y"), once.dataset.column("Y"))

    single = trim_overlap(None, gps, xc)
    assert np.isin(once.kept_index, single.kept_index).all()
    assert once.ranges == trim_overlap(None, once.gps, once.xc).ranges
