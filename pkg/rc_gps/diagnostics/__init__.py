from .BalanceReport import BalanceReport, BalanceRow, asb, balance_report
from .CutoffOverlap import CutoffOverlap, cutoff_overlap_sensitivity, cutoff_overlap_to_csv
from .OverlapSummary import OverlapSummary, overlap_summary
from .PopulationShift import PopulationShift, ShiftRow, population_shift
from .SdReference import SdReference

__all__ = [
    "BalanceReport",
    "BalanceRow",
    "CutoffOverlap",
    "OverlapSummary",
    "PopulationShift",
    "SdReference",
    "ShiftRow",
    "asb",
    "balance_report",
    "cutoff_overlap_sensitivity",
    "cutoff_overlap_to_csv",
    "overlap_summary",
    "population_shift",
]
