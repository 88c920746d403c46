import logging
from enum import Enum
from typing import Any, Dict, List, Sequence

import numpy as np

from rc_gps.estimators.EstimationMethod import EstimationMethod
from rc_gps.estimators.GPSEstimator import GPSEstimator
from rc_gps.estimators.PotentialOutcomeEstimates import PotentialOutcomeEstimates
from rc_gps.estimators.SubclassSpec import SubclassSpec
from rc_gps.exceptions import EmptySubclassError
from rc_gps.models.GpsMatrix import GpsMatrix

logger = logging.getLogger(__name__)


class SubclassCountMode(Enum):
    """
    How subclass k is weighted in ``sum_k w_k mu_{k,x}``:

    - ``SubclassCountMode.ALL_UNITS`` (``"all_units"``): ``w_k = N_k / N`` with N_k counting all units in the subclass
    - ``SubclassCountMode.CATEGORY_UNITS`` (``"category_units"``): ``w_k = N_{k,x} / N_x``, counting only units
      observed in category x
    """

    ALL_UNITS = "all_units"
    CATEGORY_UNITS = "category_units"

    @staticmethod
    def possible_values() -> List[str]:
        return [mode.value for mode in SubclassCountMode]


class SubclassificationEstimator(GPSEstimator):
    """
    Subclassification on the GPS: for each category x the units are split into K subclasses by the quantiles of
    ``p(x | c)`` over all units, and ``E[Y(x)] = sum_k (N_k / N) mu_{k,x}`` where ``mu_{k,x}`` is the mean outcome
    of the units of subclass k observed in category x.

    A subclass with units but none in category x is merged into the nearest subclass that has units in category x,
    nearest meaning fewest positions away in the ordering of the non-empty subclasses. The top subclass therefore
    merges downward and the bottom one upward. When the lower and the upper candidate are equally far, the upper one
    is chosen. Empty subclasses are merged one at a time from the lowest up, and a merged group takes the position of
    its target. Each merge is logged as a warning and recorded in :attr:`SubclassSpec.merges`. With ``strict=True``
    such a subclass raises :class:`EmptySubclassError` instead.

    Args:
        n_subclasses: number of subclasses K. Defaults to 10 (deciles).
        strict: raise instead of merging. Defaults to False.
        count_mode: subclass weighting, see :class:`SubclassCountMode`. Defaults to ``all_units``.

    Example:
        ::

            from rc_gps.estimators import SubclassificationEstimator

            estimator = SubclassificationEstimator(n_subclasses=10)
            estimates = estimator(y, xc, gps)
            estimates.means
    """

    method = EstimationMethod.SUBCLASSIFICATION

    def __init__(self, n_subclasses: int = 10, strict: bool = False, count_mode: SubclassCountMode = "all_units"):
        if n_subclasses < 1:
            raise ValueError(f"n_subclasses must be at least 1, got {n_subclasses}")
        self.n_subclasses = int(n_subclasses)
        self.strict = strict
        self.count_mode = SubclassCountMode(count_mode)

    def get_config_dict(self) -> Dict[str, Any]:
        return {"n_subclasses": self.n_subclasses, "strict": self.strict, "count_mode": self.count_mode.value}

    def estimate(self, y: np.ndarray, xc: np.ndarray, gps: GpsMatrix) -> PotentialOutcomeEstimates:
        n_units = y.size
        levels = np.arange(1, self.n_subclasses) / self.n_subclasses
        means = np.empty(gps.n_categories)
        labels = np.empty((n_units, gps.n_categories), dtype=int)
        boundaries, weights, merges = {}, {}, []

        for column, x in enumerate(gps.category_labels):
            p = gps.probs[:, column]
            inner = np.quantile(p, levels) if levels.size else np.zeros(0)
            subclass = np.searchsorted(inner, p, side="right")
            in_x = xc == x
            groups = self._merge_groups(subclass, in_x, x, merges)

            final = np.empty(n_units, dtype=int)
            for label, group in enumerate(groups, start=1):
                final[np.isin(subclass, group)] = label
            total = np.bincount(final, minlength=len(groups) + 1)[1:]
            in_category = np.bincount(final[in_x], minlength=len(groups) + 1)[1:]
            outcome_sums = np.bincount(final[in_x], weights=y[in_x], minlength=len(groups) + 1)[1:]

            occupied = total > 0
            mu = np.zeros(len(groups))
            mu[occupied] = outcome_sums[occupied] / in_category[occupied]
            if self.count_mode == SubclassCountMode.ALL_UNITS:
                subclass_weights = total / n_units
            else:
                subclass_weights = in_category / in_x.sum()
            means[column] = float(np.sum(subclass_weights * mu))

            boundaries[x] = inner
            weights[x] = subclass_weights
            labels[:, column] = final

        if merges:
            logger.info(f"Subclassification merged {len(merges)} subclass(es) lacking units of a category")
        spec = SubclassSpec(self.n_subclasses, boundaries, labels, weights, merges)
        return PotentialOutcomeEstimates(
            method=self.method,
            means=means,
            categories=gps.category_labels,
            auxiliary={"n_subclasses": self.n_subclasses, "n_merges": len(merges)},
            subclasses=spec,
        )

    def _merge_groups(
        self, subclass: np.ndarray, in_x: np.ndarray, x: int, merges: List[Dict[str, Any]]
    ) -> List[List[int]]:
        """Groups the subclass indices 0..K-1 so that every group with units also has units in category x."""
        total = np.bincount(subclass, minlength=self.n_subclasses)
        in_category = np.bincount(subclass[in_x], minlength=self.n_subclasses)
        groups = [[k] for k in range(self.n_subclasses) if total[k] > 0]
        while True:
            counts = [int(in_category[group].sum()) for group in groups]
            empty = [position for position, count in enumerate(counts) if count == 0]
            if not empty:
                return groups
            position = empty[0]
            if self.strict:
                raise EmptySubclassError(
                    f"Subclass {groups[position][0] + 1} of GPS element {x} has no units observed in category {x}"
                )
            candidates = [other for other, count in enumerate(counts) if count > 0]
            # nearest by position; on a tie max() picks the upper neighbor
            target = max(candidates, key=lambda other: (-abs(other - position), other))
            merges.append(
                {
                    "element": int(x),
                    "subclass": int(groups[position][0] + 1),
                    "merged_into": int(groups[target][0] + 1),
                }
            )
            logger.warning(
                f"Subclass {groups[position][0] + 1} of GPS element {x} has no units in category {x}; "
                f"merged into subclass {groups[target][0] + 1}"
            )
            groups[target] = sorted(groups[target] + groups[position])
            del groups[position]


def estimate_subclassification(
    y: Sequence[float],
    xc: Sequence[int],
    gps: GpsMatrix,
    n_subclasses: int = 10,
    strict: bool = False,
    count_mode: SubclassCountMode = "all_units",
) -> PotentialOutcomeEstimates:
    """Functional form of :class:`SubclassificationEstimator`."""
    return SubclassificationEstimator(n_subclasses, strict, count_mode)(y, xc, gps)
