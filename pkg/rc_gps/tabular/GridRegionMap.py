import logging
from collections import OrderedDict
from typing import Dict, Iterable, Mapping, Optional, Union

import numpy as np

from rc_gps.exceptions import DegenerateWeightsError, InvalidDataError, SchemaError
from rc_gps.tabular.ColumnRole import ColumnRole
from rc_gps.tabular.csv_io import read_csv
from rc_gps.tabular.TabularDataset import TabularDataset

logger = logging.getLogger(__name__)

RegionId = Union[int, float]


def _as_id(value: float) -> RegionId:
    value = float(value)
    return int(value) if value.is_integer() else value


class GridRegionMap:
    """
    Area weights linking exposure grid cells to the regions (e.g. zip codes) outcomes are reported for.

    Each row ``(region_id, grid_id, area_weight)`` says that ``area_weight`` of the region's area is covered by the
    grid cell. Weights are consumed as given; they need not be normalised.

    Args:
        region_ids: region identifier per row
        grid_ids: grid-cell identifier per row
        area_weights: nonnegative weight per row
    """

    def __init__(self, region_ids: Iterable[float], grid_ids: Iterable[float], area_weights: Iterable[float]):
        self.region_ids = np.asarray(list(region_ids), dtype=float)
        self.grid_ids = np.asarray(list(grid_ids), dtype=float)
        self.area_weights = np.asarray(list(area_weights), dtype=float)
        if not (self.region_ids.size == self.grid_ids.size == self.area_weights.size):
            raise SchemaError("region_ids, grid_ids and area_weights must have the same length")
        if not np.all(np.isfinite(self.area_weights)) or np.any(self.area_weights < 0):
            raise InvalidDataError("Area weights must be finite and nonnegative")
        for array in (self.region_ids, self.grid_ids, self.area_weights):
            array.flags.writeable = False

    @classmethod
    def from_dataset(
        cls,
        dataset: TabularDataset,
        region_column: str = "region_id",
        grid_column: str = "grid_id",
        weight_column: str = "area_weight",
    ) -> "GridRegionMap":
        return cls(dataset.column(region_column), dataset.column(grid_column), dataset.column(weight_column))

    @classmethod
    def from_csv(
        cls,
        path: str,
        region_column: str = "region_id",
        grid_column: str = "grid_id",
        weight_column: str = "area_weight",
    ) -> "GridRegionMap":
        return cls.from_dataset(read_csv(path), region_column, grid_column, weight_column)

    @property
    def regions(self):
        return [_as_id(region) for region in np.unique(self.region_ids)]

    def __len__(self) -> int:
        return self.region_ids.size

    def aggregate(self, grid_values: Mapping[RegionId, float]) -> Dict[RegionId, float]:
        """
        Area-weighted average ``sum_g w_g v_g / sum_g w_g`` per region.

        Args:
            grid_values: mapping from grid id to the grid-level value

        Returns:
            Dict: region id -> aggregated value, ordered by region id

        Raises:
            SchemaError: if a grid cell referenced by the map has no value
            DegenerateWeightsError: if all weights of a region are zero
        """
        lookup = {_as_id(key): float(value) for key, value in grid_values.items()}
        values = np.empty(self.grid_ids.size)
        for idx, grid_id in enumerate(self.grid_ids):
            try:
                values[idx] = lookup[_as_id(grid_id)]
            except KeyError:
                missing = _as_id(grid_id)
                raise SchemaError(f"No value for grid cell {missing!r}", column=str(missing)) from None

        regions, inverse = np.unique(self.region_ids, return_inverse=True)
        weight_sums = np.bincount(inverse, weights=self.area_weights, minlength=regions.size)
        weighted_sums = np.bincount(inverse, weights=self.area_weights * values, minlength=regions.size)
        degenerate = np.flatnonzero(weight_sums <= 0)
        if degenerate.size:
            raise DegenerateWeightsError(f"Region {_as_id(regions[degenerate[0]])!r} has only zero area weights")

        result = OrderedDict()
        for region, total, weight in zip(regions, weighted_sums, weight_sums):
            result[_as_id(region)] = float(total / weight)
        return result


def aggregate_regions(
    grid_values: Union[Mapping[RegionId, float], Iterable[float]],
    region_map: GridRegionMap,
    grid_ids: Optional[Iterable[float]] = None,
) -> Dict[RegionId, float]:
    """
    Aggregates grid-level values to regions with area-weighted averages.

    Args:
        grid_values: either a mapping grid id -> value, or a vector of values aligned with ``grid_ids``
        region_map: the area weights
        grid_ids: grid ids for a vector of ``grid_values``

    Returns:
        Dict: region id -> area-weighted average

    Example:
        ::

            region_map = GridRegionMap(region_ids=[1, 1], grid_ids=[10, 11], area_weights=[1, 3])
            aggregate_regions({10: 1.0, 11: 5.0}, region_map)
            # => {1: 4.0}
    """
    if not isinstance(grid_values, Mapping):
        if grid_ids is None:
            raise ValueError("grid_ids is required when grid_values is a vector")
        values = np.asarray(list(grid_values), dtype=float)
        ids = np.asarray(list(grid_ids), dtype=float)
        if values.shape != ids.shape:
            raise SchemaError("grid_values and grid_ids must have the same length")
        grid_values = {_as_id(grid_id): value for grid_id, value in zip(ids, values)}
    return region_map.aggregate(grid_values)


def align_regions(
    main: TabularDataset,
    region_values: Mapping[RegionId, float],
    name: str = "region_exposure",
    role: Optional[Union[str, ColumnRole]] = ColumnRole.ERROR_PRONE_EXPOSURE,
) -> TabularDataset:
    """
    Adds ``name`` to ``main`` holding, for every row, the aggregated value of its region.

    ``main`` must have a column with role ``region_id``.

    Raises:
        SchemaError: if a region of ``main`` has no aggregated value
    """
    region_column = main.role_column(ColumnRole.REGION_ID)
    lookup = {_as_id(key): float(value) for key, value in region_values.items()}
    values = np.empty(main.n_rows)
    for idx, region in enumerate(main.column(region_column)):
        try:
            values[idx] = lookup[_as_id(region)]
        except KeyError:
            raise SchemaError(
                f"Region {_as_id(region)!r} (row {idx + 1}) has no aggregated value", column=region_column
            ) from None
    return main.with_column(name, values, role=role)
