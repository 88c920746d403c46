from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional

import numpy as np

from rc_gps.estimators.EstimationMethod import EstimationMethod
from rc_gps.estimators.MatchAssignment import MatchAssignment
from rc_gps.estimators.SubclassSpec import SubclassSpec


@dataclass
class PotentialOutcomeEstimates:
    """
    Estimated potential-outcome means ``E[Y(x)]`` for the exposure categories, plus what the estimator did to get
    there.

    Args:
        method: the GPS implementation that produced the means
        means: ``E[Y(x)]`` in the order of ``categories``
        categories: exposure category labels ``1..n``
        auxiliary: scalar audit values (capped-weight fraction, effective sample sizes, merge count, ...)
        weights: IPTW only, the capped weight of each unit for its own category
        subclasses: subclassification only, the subclass structure per GPS element
        matches: matching only, the donor of each unit per category
    """

    method: EstimationMethod
    means: np.ndarray
    categories: List[int]
    auxiliary: Dict[str, Any] = field(default_factory=dict)
    weights: Optional[np.ndarray] = None
    subclasses: Optional[SubclassSpec] = None
    matches: Optional[MatchAssignment] = None

    def __post_init__(self):
        self.method = EstimationMethod(self.method)
        self.means = np.asarray(self.means, dtype=float)
        self.categories = [int(x) for x in self.categories]
        if self.means.shape != (len(self.categories),):
            raise ValueError("means must have one entry per category")

    @property
    def n_categories(self) -> int:
        return len(self.categories)

    def mean(self, x: int) -> float:
        return float(self.means[self.categories.index(int(x))])

    def to_dict(self) -> Dict[str, Any]:
        return {
            "method": self.method.value,
            "means": {str(x): float(mean) for x, mean in zip(self.categories, self.means)},
            "auxiliary": self.auxiliary,
        }
