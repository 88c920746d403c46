from .EstimationMethod import EstimationMethod
from .GPSEstimator import GPSEstimator
from .IPTWEstimator import IPTWEstimator, estimate_iptw
from .MatchAssignment import MatchAssignment
from .MatchingEstimator import MatchingEstimator, estimate_matching
from .PotentialOutcomeEstimates import PotentialOutcomeEstimates
from .SubclassificationEstimator import SubclassCountMode, SubclassificationEstimator, estimate_subclassification
from .SubclassSpec import SubclassSpec

__all__ = [
    "GPSEstimator",
    "EstimationMethod",
    "PotentialOutcomeEstimates",
    "MatchAssignment",
    "SubclassSpec",
    "SubclassCountMode",
    "SubclassificationEstimator",
    "IPTWEstimator",
    "MatchingEstimator",
    "estimate_subclassification",
    "estimate_iptw",
    "estimate_matching",
]
