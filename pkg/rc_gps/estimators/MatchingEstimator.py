import logging
from typing import Sequence, Tuple

import numpy as np

from rc_gps.estimators.EstimationMethod import EstimationMethod
from rc_gps.estimators.GPSEstimator import GPSEstimator
from rc_gps.estimators.MatchAssignment import MatchAssignment
from rc_gps.estimators.PotentialOutcomeEstimates import PotentialOutcomeEstimates
from rc_gps.exceptions import InvalidDataError
from rc_gps.models.GpsMatrix import GpsMatrix

logger = logging.getLogger(__name__)


def nearest_donors(values: np.ndarray, donor_index: np.ndarray, targets: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """
    For every target, the donor whose value is closest; ties (equal values or equal distances on both sides) go to
    the smallest donor index.

    Args:
        values: the donors' values
        donor_index: the donors' unit indices, increasing
        targets: the values to match

    Returns:
        (donor unit index per target, absolute distance per target)
    """
    order = np.argsort(values, kind="stable")
    sorted_values = values[order]
    sorted_index = donor_index[order]

    # first donor with a value >= target; the stable sort puts the smallest index first within equal values
    position = np.searchsorted(sorted_values, targets, side="left")
    has_right = position < sorted_values.size
    has_left = position > 0
    right = np.minimum(position, sorted_values.size - 1)
    left = np.maximum(position - 1, 0)
    left = np.searchsorted(sorted_values, sorted_values[left], side="left")

    left_distance = np.where(has_left, np.abs(sorted_values[left] - targets), np.inf)
    right_distance = np.where(has_right, np.abs(sorted_values[right] - targets), np.inf)
    left_unit = sorted_index[left]
    right_unit = sorted_index[right]
    take_left = (left_distance < right_distance) | ((left_distance == right_distance) & (left_unit < right_unit))
    donors = np.where(take_left, left_unit, right_unit)
    distances = np.where(take_left, left_distance, right_distance)
    return donors, distances


class MatchingEstimator(GPSEstimator):
    """
    One-to-one nearest-neighbor matching on the GPS with replacement.

    For category x, every unit j is matched to the unit i with ``X_c,i = x`` minimizing ``|p(x | c_i) - p(x | c_j)|``
    (smallest index on ties), and ``E[Y(x)]`` is the mean of the matched outcomes over all N units. Units observed in
    category x therefore match themselves unless an equally close donor has a smaller index.
    """

    method = EstimationMethod.MATCHING

    def estimate(self, y: np.ndarray, xc: np.ndarray, gps: GpsMatrix) -> PotentialOutcomeEstimates:
        means = np.empty(gps.n_categories)
        donors, distances = {}, {}
        for column, x in enumerate(gps.category_labels):
            donor_index = np.flatnonzero(xc == x)
            if donor_index.size == 0:
                raise InvalidDataError(f"No units observed in category {x} to match on")
            p = gps.probs[:, column]
            donors[x], distances[x] = nearest_donors(p[donor_index], donor_index, p)
            means[column] = float(np.mean(y[donors[x]]))

        matches = MatchAssignment(donors, distances)
        return PotentialOutcomeEstimates(
            method=self.method,
            means=means,
            categories=gps.category_labels,
            auxiliary=matches.summary(),
            matches=matches,
        )


def estimate_matching(
    y: Sequence[float], xc: Sequence[int], gps: GpsMatrix
) -> Tuple[PotentialOutcomeEstimates, MatchAssignment]:
    """Functional form of :class:`MatchingEstimator`; returns the estimates and the match assignment."""
    estimates = MatchingEstimator()(y, xc, gps)
    return estimates, estimates.matches
