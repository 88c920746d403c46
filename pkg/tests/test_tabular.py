"""
Tests the tabular layer: cut-offs, datasets with column roles and grid-to-region aggregation
"""

import numpy as np
import pytest

from rc_gps.exceptions import DegenerateWeightsError, InvalidDataError, InvalidSpecError, SchemaError
from rc_gps.tabular import (
    ColumnRole,
    CutoffSpec,
    GridRegionMap,
    TabularDataset,
    aggregate_regions,
    align_regions,
    categorize,
)


@pytest.mark.parametrize(
    ("value", "cutoffs", "expected"),
    [
        (7.5, (8, 10), 1),
        (8.0, (8, 10), 1),
        (8.5, (8, 10), 2),
        (10.0, (8, 10), 2),
        (10.1, (8, 10), 3),
        (-5.0, (-5, 15), 1),
        (15.0, (-5, 15), 2),
        (15.5, (-5, 15), 3),
    ],
)
def test_categorize_left_open_right_closed(value, cutoffs, expected) -> None:
    assert categorize([value], cutoffs)[0] == expected


def test_categorize_is_monotone() -> None:
    x = np.sort(np.random.default_rng(3).normal(size=200) * 10)
    categories = CutoffSpec([-5, 0, 5]).categorize(x)
    assert np.all(np.diff(categories) >= 0)
    assert set(categories) <= {1, 2, 3, 4}


@pytest.mark.parametrize("thresholds", [[], [10, 8], [1, 1], [0, np.inf]])
def test_cutoff_spec_rejects_invalid_thresholds(thresholds) -> None:
    with pytest.raises(InvalidSpecError):
        CutoffSpec(thresholds)


def test_categorize_rejects_non_finite_exposure() -> None:
    with pytest.raises(InvalidSpecError):
        categorize([1.0, np.nan], [0.0])


def test_refine_map() -> None:
    coarse = CutoffSpec([10])
    assert coarse.refine_map(CutoffSpec([8, 10, 12])) == {1: 1, 2: 1, 3: 2, 4: 2}
    with pytest.raises(InvalidSpecError):
        CutoffSpec([9]).refine_map(CutoffSpec([8, 10]))


def test_dataset_roles() -> None:
    dataset = TabularDataset(
        {"y": [1, 2, 3], "w": [0.5, 0.1, 0.3], "c1": [1, 0, 1], "c2": [2, 2, 3]},
        roles={"outcome": "y", "error_prone_exposure": "w", "confounder": ["c1", "c2"]},
    )
    assert dataset.n_rows == 3
    assert dataset.role_column(ColumnRole.OUTCOME) == "y"
    assert dataset.role_matrix("confounder").shape == (3, 2)
    assert dataset.role_matrix(ColumnRole.CALIBRATION_COVARIATE).shape == (3, 0)
    assert not dataset.has_role(ColumnRole.TRUE_EXPOSURE)
    with pytest.raises(SchemaError):
        dataset.role_column(ColumnRole.TRUE_EXPOSURE)


def test_dataset_is_immutable() -> None:
    dataset = TabularDataset({"y": [1.0, 2.0]}, roles={"outcome": "y"})
    with pytest.raises(ValueError):
        dataset.column("y")[0] = 5.0

    extended = dataset.with_column("x", [3.0, 4.0], role=ColumnRole.TRUE_EXPOSURE)
    assert "x" not in dataset
    assert extended.role_column(ColumnRole.TRUE_EXPOSURE) == "x"
    np.testing.assert_array_equal(extended.subset([1, 1]).column("y"), [2.0, 2.0])


@pytest.mark.parametrize(
    ("columns", "roles"),
    [
        ({"y": [1.0, 2.0]}, {"outcome": "missing"}),
        ({"y": [1.0, 2.0], "z": [1.0]}, {}),
        ({"a": [1.0], "b": [2.0]}, {"outcome": ["a", "b"]}),
    ],
)
def test_dataset_schema_errors(columns, roles) -> None:
    with pytest.raises(SchemaError):
        TabularDataset(columns, roles)


@pytest.mark.parametrize(
    ("columns", "roles"),
    [
        ({"y": [1.0, np.nan]}, {"outcome": "y"}),
        ({"xc": [1.0, 0.0]}, {"categorical_exposure": "xc"}),
        ({"xc": [1.0, 1.5]}, {"categorical_exposure": "xc"}),
        ({"t": [1.0, 0.0]}, {"offset": "t"}),
        ({"w": [1.0, -0.5]}, {"weight": "w"}),
    ],
)
def test_dataset_invalid_role_values(columns, roles) -> None:
    with pytest.raises(InvalidDataError):
        TabularDataset(columns, roles)


def test_columns_without_role_may_be_non_finite() -> None:
    dataset = TabularDataset({"y": [1.0, 2.0], "note": [np.nan, 1.0]}, roles={"outcome": "y"})
    assert dataset.n_rows == 2


def test_aggregate_single_cell() -> None:
    region_map = GridRegionMap(region_ids=[1], grid_ids=[10], area_weights=[3])
    assert aggregate_regions({10: 7.0}, region_map) == {1: 7.0}


@pytest.mark.parametrize(("weights", "expected"), [((1, 1), 3.5), ((1, 3), 4.25)])
def test_aggregate_weighted_average(weights, expected) -> None:
    region_map = GridRegionMap(region_ids=[1, 1], grid_ids=[10, 11], area_weights=weights)
    assert aggregate_regions([2.0, 5.0], region_map, grid_ids=[10, 11]) == {1: pytest.approx(expected)}


def test_aggregate_errors() -> None:
    with pytest.raises(DegenerateWeightsError):
        aggregate_regions({10: 1.0}, GridRegionMap([1], [10], [0]))
    with pytest.raises(SchemaError):
        aggregate_regions({10: 1.0}, GridRegionMap([1, 1], [10, 11], [1, 1]))
    with pytest.raises(InvalidDataError):
        GridRegionMap([1], [10], [-1])


def test_align_regions() -> None:
    main = TabularDataset({"zip": [1, 2, 1], "y": [0.0, 1.0, 2.0]}, roles={"region_id": "zip", "outcome": "y"})
    aligned = align_regions(main, {1: 4.0, 2: 3.0})
    assert aligned.role_column(ColumnRole.ERROR_PRONE_EXPOSURE) == "region_exposure"
    np.testing.assert_array_equal(aligned.role_values(ColumnRole.ERROR_PRONE_EXPOSURE), [4.0, 3.0, 4.0])
    with pytest.raises(SchemaError):
        align_regions(main, {1: 4.0})
