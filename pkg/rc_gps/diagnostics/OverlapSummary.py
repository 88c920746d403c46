import logging
from dataclasses import dataclass
from typing import Any, Dict, List, Sequence, Tuple

import numpy as np

from rc_gps.exceptions import InvalidDataError
from rc_gps.models.GpsMatrix import GpsMatrix
from rc_gps.util import write_csv_rows, write_json

logger = logging.getLogger(__name__)


@dataclass
class OverlapSummary:
    """
    Distribution of every GPS element within every exposure group.

    Args:
        bin_edges: the ``bins + 1`` histogram edges over [0, 1]
        elements: the GPS elements (category labels)
        groups: the observed exposure categories
        counts: array of shape (elements, groups, bins); ``counts[e, g].sum()`` is the size of group g
        ranges: per element, per group, the ``(min, max)`` of the element within the group
        intersections: per element, ``(max of the group minima, min of the group maxima)``
        fraction_inside: per element, the share of all units whose value lies in the intersection
    """

    bin_edges: np.ndarray
    elements: List[int]
    groups: List[int]
    counts: np.ndarray
    ranges: Dict[int, Dict[int, Tuple[float, float]]]
    intersections: Dict[int, Tuple[float, float]]
    fraction_inside: Dict[int, float]

    @property
    def complete_overlap(self) -> bool:
        """True when every element's cross-group range intersection is nonempty."""
        return all(lower <= upper for lower, upper in self.intersections.values())

    def to_dict(self) -> Dict[str, Any]:
        return {
            "bin_edges": self.bin_edges,
            "complete_overlap": self.complete_overlap,
            "elements": {
                str(x): {
                    "intersection": list(self.intersections[x]),
                    "fraction_inside": self.fraction_inside[x],
                    "ranges": {str(g): list(bounds) for g, bounds in self.ranges[x].items()},
                }
                for x in self.elements
            },
        }

    def histogram_to_csv(self, path: str) -> None:
        def rows():
            for e, x in enumerate(self.elements):
                for g, group in enumerate(self.groups):
                    for b in range(self.counts.shape[2]):
                        yield [x, group, self.bin_edges[b], self.bin_edges[b + 1], self.counts[e, g, b]]

        write_csv_rows(path, ["element", "group", "bin_lower", "bin_upper", "count"], rows())

    def ranges_to_csv(self, path: str) -> None:
        """One row per (element, group) plus one ``intersection`` row per element."""

        def rows():
            for e, x in enumerate(self.elements):
                for g, group in enumerate(self.groups):
                    lower, upper = self.ranges[x][group]
                    yield [x, group, lower, upper, int(self.counts[e, g].sum())]
                lower, upper = self.intersections[x]
                yield [x, "intersection", lower, upper, self.fraction_inside[x]]

        write_csv_rows(path, ["element", "group", "min", "max", "n_or_fraction"], rows())

    def to_json(self, path: str) -> None:
        write_json(path, self.to_dict())


def overlap_summary(gps: GpsMatrix, xc: Sequence[int], bins: int = 30) -> OverlapSummary:
    """
    Histograms (over [0, 1]) and ranges of every GPS element per exposure group, and the share of units inside the
    cross-group range intersection of each element.

    Args:
        gps: the GPS matrix
        xc: exposure categories aligned with ``gps``
        bins: number of equal-width bins. Defaults to 30.

    Returns:
        OverlapSummary: the summary

    Example:
        ::

            summary = overlap_summary(result.gps, result.xc)
            summary.complete_overlap
            summary.histogram_to_csv("overlap_histogram.csv")
    """
    if bins < 1:
        raise ValueError(f"bins must be at least 1, got {bins}")
    xc = np.asarray(xc, dtype=int)
    if xc.size != gps.n_rows:
        raise InvalidDataError(f"Exposure vector has {xc.size} entries, GPS matrix has {gps.n_rows} rows")

    bin_edges = np.linspace(0.0, 1.0, bins + 1)
    groups = [int(g) for g in np.unique(xc)]
    counts = np.zeros((gps.n_categories, len(groups), bins), dtype=int)
    ranges, intersections, fraction_inside = {}, {}, {}
    for e, x in enumerate(gps.category_labels):
        values = gps.probs[:, e]
        ranges[x] = {}
        for g, group in enumerate(groups):
            group_values = values[xc == group]
            counts[e, g], _ = np.histogram(group_values, bins=bin_edges)
            ranges[x][group] = (float(group_values.min()), float(group_values.max()))
        lower = max(bounds[0] for bounds in ranges[x].values())
        upper = min(bounds[1] for bounds in ranges[x].values())
        intersections[x] = (lower, upper)
        fraction_inside[x] = float(np.mean((values >= lower) & (values <= upper)))

    summary = OverlapSummary(
        bin_edges, list(gps.category_labels), groups, counts, ranges, intersections, fraction_inside
    )
    if not summary.complete_overlap:
        logger.warning("Some GPS element has no common support across the exposure groups")
    return summary
