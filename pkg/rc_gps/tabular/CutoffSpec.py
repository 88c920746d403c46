import logging
from typing import Dict, Iterable, Tuple

import numpy as np

from rc_gps.exceptions import InvalidSpecError

logger = logging.getLogger(__name__)


class CutoffSpec:
    """
    Strictly increasing thresholds ``k_1 < ... < k_{n-1}`` that split a continuous exposure into ``n`` categories.

    Category ``c`` holds the values with ``k_{c-1} < x <= k_c`` (``k_0 = -inf``, ``k_n = +inf``), i.e. intervals are
    left-open and right-closed, so with thresholds ``(8, 10)`` the value 8 falls into category 1 and 8.5 into
    category 2.

    Args:
        thresholds: the cut-off points, strictly increasing and finite

    Example:
        ::

            from rc_gps.tabular import CutoffSpec

            cutoffs = CutoffSpec([8, 10])
            cutoffs.categorize([7.5, 8.0, 9.0, 12.0])
            # => array([1, 1, 2, 3])
    """

    def __init__(self, thresholds: Iterable[float]):
        thresholds = np.asarray(list(thresholds), dtype=float)
        if thresholds.ndim != 1 or thresholds.size == 0:
            raise InvalidSpecError("Cut-off specification needs at least one threshold")
        if not np.all(np.isfinite(thresholds)):
            raise InvalidSpecError("Cut-off thresholds must be finite")
        if np.any(np.diff(thresholds) <= 0):
            raise InvalidSpecError(f"Cut-off thresholds must be strictly increasing, got {thresholds.tolist()}")
        thresholds.flags.writeable = False
        self.thresholds = thresholds

    @property
    def n_categories(self) -> int:
        return self.thresholds.size + 1

    @property
    def categories(self) -> Tuple[int, ...]:
        return tuple(range(1, self.n_categories + 1))

    def categorize(self, x: Iterable[float]) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if not np.all(np.isfinite(x)):
            raise InvalidSpecError("Cannot categorize non-finite exposure values")
        # side="left" puts x == k_c into category c
        return np.searchsorted(self.thresholds, x, side="left").astype(int) + 1

    def refine_map(self, finer: "CutoffSpec") -> Dict[int, int]:
        """
        Maps each category of ``finer`` to the category of ``self`` that contains it.

        ``finer`` must contain every threshold of ``self``.
        """
        missing = self.thresholds[~np.isin(self.thresholds, finer.thresholds)]
        if missing.size:
            raise InvalidSpecError(f"Cut-offs {finer.thresholds.tolist()} do not refine {self.thresholds.tolist()}")
        mapping = {}
        for category in finer.categories:
            # the right end of a fine interval identifies the coarse interval containing it
            upper = finer.thresholds[category - 1] if category < finer.n_categories else np.inf
            mapping[category] = int(np.searchsorted(self.thresholds, upper, side="left")) + 1
        return mapping

    def to_list(self):
        return self.thresholds.tolist()

    def __eq__(self, other) -> bool:
        return isinstance(other, CutoffSpec) and np.array_equal(self.thresholds, other.thresholds)

    def __repr__(self) -> str:
        return "CutoffSpec({})".format(self.thresholds.tolist())


def categorize(x: Iterable[float], cutoffs: "CutoffSpec") -> np.ndarray:
    """
    Transforms a continuous exposure into categories ``1..n`` using left-open, right-closed intervals.

    Args:
        x: continuous exposure values (finite)
        cutoffs: the cut-off specification, or a sequence of thresholds

    Returns:
        np.ndarray: integer categories in ``1..n``
    """
    if not isinstance(cutoffs, CutoffSpec):
        cutoffs = CutoffSpec(cutoffs)
    return cutoffs.categorize(x)
