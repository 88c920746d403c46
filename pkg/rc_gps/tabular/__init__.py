from .ColumnRole import ColumnRole
from .csv_io import read_csv, write_csv
from .CutoffSpec import CutoffSpec, categorize
from .GridRegionMap import GridRegionMap, aggregate_regions, align_regions
from .TabularDataset import TabularDataset

__all__ = [
    "ColumnRole",
    "CutoffSpec",
    "GridRegionMap",
    "TabularDataset",
    "aggregate_regions",
    "align_regions",
    "categorize",
    "read_csv",
    "write_csv",
]
