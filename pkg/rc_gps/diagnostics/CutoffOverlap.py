import logging
from dataclasses import dataclass, field
from typing import Dict, Iterable, List, Optional, Sequence, Union

import numpy as np

from rc_gps.diagnostics.OverlapSummary import overlap_summary
from rc_gps.exceptions import DataError
from rc_gps.gps import TrimmingStrategy, fit_multinomial, trim_overlap
from rc_gps.tabular import CutoffSpec
from rc_gps.util import write_csv_rows

logger = logging.getLogger(__name__)


@dataclass
class CutoffOverlap:
    """
    Overlap achieved by one candidate cut-off set.

    Args:
        cutoffs: the thresholds
        category_sizes: number of units per category
        fraction_inside: per GPS element, the share of units inside the cross-group range intersection
        kept_fraction: share of units kept by the range-intersection trimming (0 if everything was trimmed)
        error: why the candidate could not be evaluated, if it could not
    """

    cutoffs: List[float]
    category_sizes: List[int] = field(default_factory=list)
    fraction_inside: Dict[int, float] = field(default_factory=dict)
    kept_fraction: Optional[float] = None
    error: Optional[str] = None

    @property
    def min_fraction_inside(self) -> float:
        return min(self.fraction_inside.values()) if self.fraction_inside else 0.0


def cutoff_overlap_sensitivity(
    exposure: Sequence[float],
    C: np.ndarray,
    candidates: Iterable[Union[CutoffSpec, Sequence[float]]],
    confounder_names: Optional[Sequence[str]] = None,
    ridge: Optional[float] = None,
    ridge_fallback: bool = False,
) -> List[CutoffOverlap]:
    """
    Refits the GPS model for every candidate cut-off set and reports how well the exposure groups overlap, to help
    choosing cut-offs with good common support.

    Candidates whose categories cannot be modeled (an empty category, separation, ...) are reported with ``error``
    set instead of raising.

    Args:
        exposure: the continuous exposure to categorize (typically the calibrated one)
        C: confounder matrix
        candidates: the cut-off sets to compare
        confounder_names: names stored on the GPS models
        ridge: ridge penalty of the GPS models
        ridge_fallback: refit with a small ridge penalty on separation

    Returns:
        List[CutoffOverlap]: one entry per candidate, in input order
    """
    exposure = np.asarray(exposure, dtype=float)
    C = np.asarray(C, dtype=float)
    results = []
    for candidate in candidates:
        cutoffs = candidate if isinstance(candidate, CutoffSpec) else CutoffSpec(candidate)
        entry = CutoffOverlap(cutoffs.to_list())
        xc = cutoffs.categorize(exposure)
        entry.category_sizes = np.bincount(xc, minlength=cutoffs.n_categories + 1)[1:].tolist()
        try:
            gps = fit_multinomial(
                xc,
                C,
                n_categories=cutoffs.n_categories,
                confounder_names=confounder_names,
                ridge=ridge,
                ridge_fallback=ridge_fallback,
            ).predict(C)
            entry.fraction_inside = overlap_summary(gps, xc).fraction_inside
            entry.kept_fraction = trim_overlap(None, gps, xc, TrimmingStrategy.RANGE_INTERSECTION).kept_fraction
        except DataError as error:
            entry.error = str(error)
            if entry.fraction_inside:
                entry.kept_fraction = 0.0
        logger.info(f"Cut-offs {entry.cutoffs}: kept fraction {entry.kept_fraction}, error {entry.error}")
        results.append(entry)
    return results


def cutoff_overlap_to_csv(results: Sequence[CutoffOverlap], path: str) -> None:
    n_elements = max((len(entry.category_sizes) for entry in results), default=0)
    header = ["cutoffs", "category_sizes", "kept_fraction", "min_fraction_inside"]
    header += [f"fraction_inside_{x}" for x in range(1, n_elements + 1)] + ["error"]
    rows = (
        [
            " ".join(repr(float(k)) for k in entry.cutoffs),
            " ".join(str(size) for size in entry.category_sizes),
            entry.kept_fraction,
            entry.min_fraction_inside if entry.fraction_inside else None,
        ]
        + [entry.fraction_inside.get(x) for x in range(1, n_elements + 1)]
        + [entry.error]
        for entry in results
    )
    write_csv_rows(path, header, rows)
