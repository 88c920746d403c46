"""
Tests covariate balance, overlap summaries, population shift and the cut-off overlap comparison
"""

import os

import numpy as np
import pytest
from scipy.special import softmax

from rc_gps.diagnostics import (
    SdReference,
    asb,
    balance_report,
    cutoff_overlap_sensitivity,
    cutoff_overlap_to_csv,
    overlap_summary,
    population_shift,
)
from rc_gps.estimators import IPTWEstimator, MatchAssignment, MatchingEstimator, SubclassificationEstimator
from rc_gps.exceptions import ConstantCovariateError, InvalidDataError
from rc_gps.gps import GpsMatrix, fit_multinomial
from rc_gps.pipeline import RCGPSPipeline
from rc_gps.simulation import ScenarioConfig, generate_scenario


def test_asb_hand_computed() -> None:
    # group means 1 and 0, pooled standard deviation 2
    s = np.sqrt(11) / 2
    C = np.array([1 + s, 1 - s, s, -s])
    assert asb(C, [1, 1, 2, 2], 1) == pytest.approx([0.5])
    assert asb(C, [1, 1, 2, 2], 2) == pytest.approx([0.5])


def test_asb_weights_remove_imbalance() -> None:
    C = np.array([0.0, 2.0, 0.0, 4.0])
    assert asb(C, [1, 1, 2, 2], 1)[0] > 0
    assert asb(C, [1, 1, 2, 2], 1, weights=np.array([1.0, 1.0, 3.0, 1.0])) == pytest.approx([0.0])


def test_asb_subclass_design() -> None:
    C = np.array([0.0, 2.0, 0.0, 4.0])
    # subclass 1 differs by 0, subclass 2 by -2; equal sizes
    value = asb(C, [1, 1, 2, 2], 1, subclass_labels=np.array([1, 2, 1, 2]))
    assert value == pytest.approx([1.0 / np.std(C, ddof=1)])


def test_asb_matching_design() -> None:
    # units 2 and 3 (mean 1) are matched to units 0 and 1 (mean 1)
    C = np.array([0.0, 2.0, 1.0, 1.0])
    matches = MatchAssignment(
        donors={1: np.array([0, 1, 0, 1]), 2: np.array([2, 3, 2, 3])},
        distances={1: np.zeros(4), 2: np.zeros(4)},
    )
    assert asb(C, [1, 1, 2, 2], 1, matches=matches) == pytest.approx([0.0])


def test_asb_treated_reference() -> None:
    C = np.array([0.0, 2.0, 1.0, 1.0])
    value = asb(C, [1, 1, 2, 2], 1, sd_reference=SdReference.TREATED)
    assert value == pytest.approx([0.0])
    with pytest.raises(ConstantCovariateError):
        asb(C, [1, 1, 2, 2], 2, sd_reference="treated")


def test_asb_errors() -> None:
    C = np.array([0.0, 2.0, 0.0, 4.0])
    with pytest.raises(ValueError):
        asb(C, [1, 1, 2, 2], 1, weights=np.ones(4), subclass_labels=np.ones(4))
    with pytest.raises(InvalidDataError):
        asb(C, [1, 1, 1, 1], 1)
    with pytest.raises(InvalidDataError):
        asb(C, [1, 1, 2], 1)
    with pytest.raises(ConstantCovariateError) as excinfo:
        asb(np.column_stack([C, np.ones(4)]), [1, 1, 2, 2], 1, confounder_names=["age", "flag"])
    assert "flag" in str(excinfo.value)


def _confounded_sample(n_units: int = 2000, seed: int = 0):
    rng = np.random.default_rng(seed)
    C = rng.normal(size=(n_units, 2))
    logits = np.column_stack([1.2 * C[:, 0], 0.6 * C[:, 1], np.zeros(n_units)])
    probs = softmax(logits, axis=1)
    xc = np.array([rng.choice(3, p=row) + 1 for row in probs])
    y = C.sum(axis=1) + xc + rng.normal(size=n_units)
    gps = fit_multinomial(xc, C).predict(C)
    return C, xc, y, gps


@pytest.mark.parametrize(
    "estimator", [IPTWEstimator(hajek=True), SubclassificationEstimator(n_subclasses=5), MatchingEstimator()]
)
def test_balance_report_improves_balance(estimator) -> None:
    C, xc, y, gps = _confounded_sample()
    report = balance_report(C, ["c1", "c2"], xc, estimator(y, xc, gps), kept_fraction=0.9)
    assert len(report.rows) == 6
    assert report.confounders == ["c1", "c2"]
    assert report.max_asb() < report.max_asb(after=False)
    assert report.n_improved() == 2
    assert report.get("c1", 1).asb_before > 0.2


@pytest.mark.parametrize("method", ["subclassification", "iptw", "matching"])
def test_balance_improves_on_default_scenario(method: str) -> None:
    """At least five of the six confounders are better balanced after each design."""
    cfg = ScenarioConfig.preset("default")
    main, validation = generate_scenario(cfg, seed=0)
    result = RCGPSPipeline(cfg.cutoffs, method=method).run(main, validation)
    trimmed = result.trim.dataset
    report = balance_report(
        trimmed.role_matrix("confounder"),
        list(trimmed.role_columns("confounder")),
        result.trim.xc,
        result.estimates,
        kept_fraction=result.trim.kept_fraction,
    )
    assert len(report.confounders) == 6
    assert report.n_improved() >= 5


def test_balance_report_files(tmp_path) -> None:
    C, xc, y, gps = _confounded_sample(n_units=500)
    report = balance_report(C, None, xc, IPTWEstimator()(y, xc, gps))
    path = os.path.join(tmp_path, "balance.csv")
    report.to_csv(path)
    with open(path, encoding="utf-8") as fIn:
        lines = fIn.read().splitlines()
    assert lines[0] == "confounder,category,asb_before,asb_after,method"
    assert lines[1].startswith("c1,1,")
    assert lines[1].endswith(",iptw")
    assert len(lines) == 7
    assert report.to_dict()["sd_reference"] == "pooled"


TOY_GPS = GpsMatrix(
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
TOY_XC = [1, 1, 2, 2, 3, 3, 3]


def test_overlap_summary() -> None:
    summary = overlap_summary(TOY_GPS, TOY_XC, bins=10)
    assert summary.groups == [1, 2, 3]
    assert summary.counts.shape == (3, 3, 10)
    assert summary.counts[0, 2].sum() == 3
    assert summary.ranges[1][3] == pytest.approx((0.01, 0.5))
    assert summary.intersections[1] == pytest.approx((0.05, 0.5))
    assert summary.fraction_inside[1] == pytest.approx(6 / 7)
    assert summary.complete_overlap


def test_overlap_summary_files(tmp_path) -> None:
    summary = overlap_summary(TOY_GPS, TOY_XC, bins=4)
    histogram_path = os.path.join(tmp_path, "overlap_histogram.csv")
    ranges_path = os.path.join(tmp_path, "overlap_ranges.csv")
    summary.histogram_to_csv(histogram_path)
    summary.ranges_to_csv(ranges_path)
    with open(histogram_path, encoding="utf-8") as fIn:
        assert len(fIn.read().splitlines()) == 1 + 3 * 3 * 4
    with open(ranges_path, encoding="utf-8") as fIn:
        lines = fIn.read().splitlines()
    assert lines[0] == "element,group,min,max,n_or_fraction"
    assert sum(line.split(",")[1] == "intersection" for line in lines) == 3


def test_overlap_summary_errors() -> None:
    with pytest.raises(ValueError):
        overlap_summary(TOY_GPS, TOY_XC, bins=0)
    with pytest.raises(InvalidDataError):
        overlap_summary(TOY_GPS, TOY_XC[:3])


def test_overlap_summary_without_common_support() -> None:
    gps = GpsMatrix([[0.9, 0.1], [0.8, 0.2], [0.3, 0.7], [0.1, 0.9]])
    summary = overlap_summary(gps, [1, 1, 2, 2])
    assert not summary.complete_overlap


def test_population_shift() -> None:
    C = np.array([[0.0, 1.0], [2.0, 1.0], [4.0, 1.0], [6.0, 1.0]])
    shift = population_shift(C, ["a", "b"], [0, 1])
    assert shift.kept_fraction == 0.5
    row = shift.rows[0]
    assert row.mean_full == pytest.approx(3.0)
    assert row.mean_kept == pytest.approx(1.0)
    assert row.standardized_shift == pytest.approx(-2.0 / np.std([0.0, 2.0, 4.0, 6.0], ddof=1))
    assert shift.rows[1].standardized_shift == 0.0
    with pytest.raises(InvalidDataError):
        population_shift(C, None, [])


def test_cutoff_overlap_sensitivity(tmp_path) -> None:
    rng = np.random.default_rng(3)
    C = rng.normal(size=(800, 2))
    exposure = C @ np.array([1.0, 0.5]) + rng.normal(size=800)
    results = cutoff_overlap_sensitivity(exposure, C, [[-0.5, 0.5], [0.0], [100.0]])

    assert [entry.cutoffs for entry in results] == [[-0.5, 0.5], [0.0], [100.0]]
    assert sum(results[0].category_sizes) == 800
    assert len(results[0].fraction_inside) == 3
    assert 0 < results[0].kept_fraction <= 1
    assert results[1].error is None
    assert results[2].category_sizes == [800, 0]
    assert results[2].error is not None
    assert results[2].kept_fraction is None

    path = os.path.join(tmp_path, "cutoffs.csv")
    cutoff_overlap_to_csv(results, path)
    with open(path, encoding="utf-8") as fIn:
        lines = fIn.read().splitlines()
    assert lines[0].split(",")[-1] == "error"
    assert len(lines) == 4
