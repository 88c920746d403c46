"""
Tests the subclassification, IPTW and matching estimators on hand-computed instances
"""

import os

import numpy as np
import pytest

from rc_gps.estimators import (
    EstimationMethod,
    IPTWEstimator,
    MatchingEstimator,
    SubclassificationEstimator,
    estimate_iptw,
    estimate_matching,
    estimate_subclassification,
)
from rc_gps.estimators.MatchingEstimator import nearest_donors
from rc_gps.exceptions import EmptySubclassError, InvalidDataError, PositivityError
from rc_gps.gps import GpsMatrix


def _two_category_gps(p1):
    p1 = np.asarray(p1, dtype=float)
    return GpsMatrix(np.column_stack([p1, 1.0 - p1]))


IPTW_GPS = GpsMatrix([[0.5, 0.5], [0.25, 0.75], [0.2, 0.8], [0.6, 0.4]])
IPTW_XC = [1, 1, 2, 2]
IPTW_Y = [1.0, 2.0, 3.0, 4.0]


def test_iptw_horvitz_thompson() -> None:
    estimates = estimate_iptw(IPTW_Y, IPTW_XC, IPTW_GPS)
    np.testing.assert_allclose(estimates.means, [2.5, 3.4375])
    np.testing.assert_allclose(estimates.weights, [2.0, 4.0, 1.25, 2.5])
    assert estimates.method == EstimationMethod.IPTW
    assert estimates.auxiliary["n_capped"] == 0


def test_iptw_hajek() -> None:
    estimates = estimate_iptw(IPTW_Y, IPTW_XC, IPTW_GPS, hajek=True)
    np.testing.assert_allclose(estimates.means, [10 / 6, 13.75 / 3.75])


def test_iptw_weight_cap() -> None:
    estimates = IPTWEstimator(weight_cap=3.0)(IPTW_Y, IPTW_XC, IPTW_GPS)
    assert estimates.mean(1) == pytest.approx(2.0)
    assert estimates.auxiliary["capped_fraction"] == pytest.approx(0.25)
    assert estimates.weights.max() == 3.0


def test_iptw_effective_sample_size() -> None:
    estimates = estimate_iptw(IPTW_Y, IPTW_XC, IPTW_GPS)
    assert estimates.auxiliary["effective_sample_size"]["1"] == pytest.approx(36 / 20)


def test_iptw_zero_propensity() -> None:
    with pytest.raises(PositivityError):
        estimate_iptw([1.0, 2.0], [2, 1], GpsMatrix([[1.0, 0.0], [0.5, 0.5]]))


def test_subclassification_two_subclasses() -> None:
    gps = _two_category_gps([0.2, 0.4, 0.6, 0.8])
    estimates = estimate_subclassification([1.0, 2.0, 3.0, 4.0], [1, 2, 1, 2], gps, n_subclasses=2)
    np.testing.assert_allclose(estimates.means, [2.0, 3.0])
    assert estimates.subclasses.merges == []
    np.testing.assert_array_equal(estimates.subclasses.labels[:, 0], [1, 1, 2, 2])


def test_subclassification_merges_into_upper_neighbor() -> None:
    gps = _two_category_gps([0.1, 0.2, 0.3, 0.4, 0.5, 0.6])
    y = np.arange(1.0, 7.0)
    estimates = estimate_subclassification(y, [1, 2, 2, 2, 1, 2], gps, n_subclasses=3)
    assert estimates.subclasses.merges == [{"element": 1, "subclass": 2, "merged_into": 3}]
    assert estimates.auxiliary["n_merges"] == 1
    assert estimates.mean(1) == pytest.approx(2 / 6 * 1.0 + 4 / 6 * 5.0)


def test_subclassification_merges_top_subclass_downward() -> None:
    gps = _two_category_gps([0.1, 0.2, 0.3, 0.4, 0.5, 0.6])
    y = np.arange(1.0, 7.0)
    estimates = estimate_subclassification(y, [1, 2, 1, 2, 2, 2], gps, n_subclasses=3)
    assert estimates.subclasses.merges == [{"element": 1, "subclass": 3, "merged_into": 2}]
    assert estimates.mean(1) == pytest.approx(2 / 6 * 1.0 + 4 / 6 * 3.0)


def test_subclassification_strict_mode() -> None:
    gps = _two_category_gps([0.2, 0.4, 0.6, 0.8])
    y, xc = [1.0, 2.0, 3.0, 4.0], [2, 2, 1, 1]
    estimates = estimate_subclassification(y, xc, gps, n_subclasses=2)
    np.testing.assert_allclose(estimates.means, [3.5, 1.5])
    assert len(estimates.subclasses.merges) == 2
    with pytest.raises(EmptySubclassError):
        SubclassificationEstimator(n_subclasses=2, strict=True)(y, xc, gps)


def test_matching_with_replacement() -> None:
    gps = _two_category_gps([0.9, 0.1, 0.8, 0.2])
    estimates, matches = estimate_matching([10.0, 20.0, 30.0, 40.0], [1, 2, 1, 2], gps)
    np.testing.assert_array_equal(matches.donors_for(1), [0, 2, 2, 2])
    np.testing.assert_array_equal(matches.donors_for(2), [3, 1, 3, 3])
    np.testing.assert_allclose(estimates.means, [25.0, 35.0])
    np.testing.assert_allclose(matches.distances[1], [0.0, 0.7, 0.0, 0.6])


def test_matching_ties_go_to_smallest_index() -> None:
    gps = _two_category_gps([0.75, 0.25, 0.5])
    _, matches = estimate_matching([1.0, 2.0, 3.0], [1, 1, 2], gps)
    assert matches.donors_for(1)[2] == 0


def test_matching_audit_file(tmp_path) -> None:
    gps = _two_category_gps([0.9, 0.1, 0.8, 0.2])
    estimates = MatchingEstimator()([10.0, 20.0, 30.0, 40.0], [1, 2, 1, 2], gps)
    path = os.path.join(tmp_path, "matches.csv")
    estimates.matches.to_csv(path, index=[11, 12, 13, 14])
    with open(path, encoding="utf-8") as fIn:
        lines = fIn.read().splitlines()
    assert lines[0] == "unit,category,donor,distance"
    assert lines[2].startswith("12,1,13,0.7")
    assert len(lines) == 9


@pytest.mark.parametrize(
    "estimator",
    [
        SubclassificationEstimator(n_subclasses=2),
        IPTWEstimator(hajek=True),
        MatchingEstimator(),
    ],
)
def test_constant_outcome_gives_constant_means(estimator) -> None:
    rng = np.random.default_rng(0)
    gps = _two_category_gps(rng.uniform(0.2, 0.8, size=40))
    xc = np.tile([1, 2], 20)
    estimates = estimator(np.full(40, 7.0), xc, gps)
    np.testing.assert_allclose(estimates.means, 7.0)


CONSTANT_XC = np.array([2, 1, 3, 3, 1, 2, 1, 2, 3, 1, 2, 3, 3, 1, 2, 2, 1, 3])
CONSTANT_Y = np.random.default_rng(3).normal(10.0, 4.0, size=CONSTANT_XC.size)


@pytest.mark.parametrize(
    "estimator",
    [
        SubclassificationEstimator(n_subclasses=1),
        SubclassificationEstimator(n_subclasses=3),
        SubclassificationEstimator(n_subclasses=10),
        IPTWEstimator(hajek=True),
        IPTWEstimator(),
    ],
)
def test_constant_gps_gives_category_means(estimator) -> None:
    """Without confounding the weighted designs reduce to the plain mean of Y in each category."""
    gps = GpsMatrix(np.full((CONSTANT_XC.size, 3), 1 / 3))
    estimates = estimator(CONSTANT_Y, CONSTANT_XC, gps)
    expected = [CONSTANT_Y[CONSTANT_XC == x].mean() for x in (1, 2, 3)]
    np.testing.assert_allclose(estimates.means, expected, rtol=1e-12)


def test_constant_gps_matches_every_unit_to_the_first_donor() -> None:
    gps = GpsMatrix(np.full((CONSTANT_XC.size, 3), 1 / 3))
    estimates, matches = estimate_matching(CONSTANT_Y, CONSTANT_XC, gps)
    for x in (1, 2, 3):
        first = np.flatnonzero(CONSTANT_XC == x)[0]
        np.testing.assert_array_equal(matches.donors_for(x), first)
        assert estimates.mean(x) == pytest.approx(CONSTANT_Y[first])


@pytest.mark.parametrize("scale, offset", [(1.0, 0.0), (0.5, 0.25), (0.2, 0.4)])
def test_matching_invariant_to_affine_gps_transform(scale: float, offset: float) -> None:
    rng = np.random.default_rng(8)
    p1 = rng.uniform(0.2, 0.8, size=60)
    xc = rng.integers(1, 3, size=60)
    y = rng.normal(size=60)
    estimates, matches = estimate_matching(y, xc, _two_category_gps(p1))
    shrunk, shrunk_matches = estimate_matching(y, xc, _two_category_gps(offset + scale * p1))
    for x in (1, 2):
        np.testing.assert_array_equal(shrunk_matches.donors_for(x), matches.donors_for(x))
    np.testing.assert_allclose(shrunk.means, estimates.means)


@pytest.mark.parametrize("transform", [lambda v: 3.0 * v - 1.0, lambda v: 5.0 - 2.0 * v, lambda v: 0.5 * v])
def test_nearest_donors_invariant_to_affine_transform(transform) -> None:
    rng = np.random.default_rng(9)
    values = rng.uniform(size=40)
    donor_index = np.flatnonzero(rng.uniform(size=40) < 0.4)
    donors, _ = nearest_donors(values[donor_index], donor_index, values)
    moved, _ = nearest_donors(transform(values)[donor_index], donor_index, transform(values))
    np.testing.assert_array_equal(moved, donors)


def test_input_validation() -> None:
    gps = _two_category_gps([0.2, 0.4])
    with pytest.raises(InvalidDataError):
        estimate_iptw([1.0], [1, 2], gps)
    with pytest.raises(InvalidDataError):
        estimate_iptw([1.0, np.nan], [1, 2], gps)
    with pytest.raises(InvalidDataError):
        estimate_iptw([1.0, 2.0], [1, 1], gps)


@pytest.mark.parametrize(
    ("method", "kwargs", "cls"),
    [
        ("subclassification", {"n_subclasses": 5}, SubclassificationEstimator),
        ("iptw", {"weight_cap": 20}, IPTWEstimator),
        ("matching", {}, MatchingEstimator),
    ],
)
def test_method_to_estimator(method, kwargs, cls) -> None:
    estimator = EstimationMethod(method).to_estimator(**kwargs)
    assert isinstance(estimator, cls)
    assert estimator.method == EstimationMethod(method)
