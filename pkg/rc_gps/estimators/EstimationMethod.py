from enum import Enum
from typing import TYPE_CHECKING, List

if TYPE_CHECKING:
    from rc_gps.estimators.GPSEstimator import GPSEstimator


class EstimationMethod(Enum):
    """
    GPS implementations that turn outcomes, exposure categories and GPS into potential-outcome means:

    - ``EstimationMethod.SUBCLASSIFICATION`` (``"subclassification"``): stratify on quantiles of each GPS element
    - ``EstimationMethod.IPTW`` (``"iptw"``): weight by the inverse of each unit's own GPS element
    - ``EstimationMethod.MATCHING`` (``"matching"``): nearest-neighbor matching on each GPS element, with replacement
    """

    SUBCLASSIFICATION = "subclassification"
    IPTW = "iptw"
    MATCHING = "matching"

    @staticmethod
    def possible_values() -> List[str]:
        return [method.value for method in EstimationMethod]

    def to_estimator(self, **kwargs) -> "GPSEstimator":
        """
        Builds the estimator of this method; ``kwargs`` go to its constructor.

        Example:
            >>> estimator = EstimationMethod("iptw").to_estimator(weight_cap=10)
            >>> estimates = estimator(y, xc, gps)
        """
        from rc_gps.estimators.IPTWEstimator import IPTWEstimator
        from rc_gps.estimators.MatchingEstimator import MatchingEstimator
        from rc_gps.estimators.SubclassificationEstimator import SubclassificationEstimator

        if self == EstimationMethod.SUBCLASSIFICATION:
            return SubclassificationEstimator(**kwargs)
        if self == EstimationMethod.IPTW:
            return IPTWEstimator(**kwargs)
        return MatchingEstimator(**kwargs)
