import logging
from typing import Any, Dict, Optional, Sequence

import numpy as np

from rc_gps.estimators.EstimationMethod import EstimationMethod
from rc_gps.estimators.GPSEstimator import GPSEstimator
from rc_gps.estimators.PotentialOutcomeEstimates import PotentialOutcomeEstimates
from rc_gps.exceptions import PositivityError
from rc_gps.models.GpsMatrix import GpsMatrix

logger = logging.getLogger(__name__)


class IPTWEstimator(GPSEstimator):
    """
    Inverse probability of treatment weighting with the GPS.

    Each unit gets the weight ``w_j = min(1 / p(X_c,j | c_j), weight_cap)``. The default Horvitz-Thompson form is
    ``E[Y(x)] = (1/N) sum_j Y_j I_j(x) w_j``; the Hajek form divides by ``sum_j I_j(x) w_j`` instead of N.

    Args:
        weight_cap: weights above the cap are set to the cap; None disables capping. Defaults to 10.
        hajek: use the normalized (Hajek) form. Defaults to False.
    """

    method = EstimationMethod.IPTW

    def __init__(self, weight_cap: Optional[float] = 10.0, hajek: bool = False):
        if weight_cap is not None and weight_cap <= 0:
            raise ValueError(f"weight_cap must be positive, got {weight_cap}")
        self.weight_cap = weight_cap
        self.hajek = hajek

    def get_config_dict(self) -> Dict[str, Any]:
        return {"weight_cap": self.weight_cap, "hajek": self.hajek}

    def unit_weights(self, xc: np.ndarray, gps: GpsMatrix) -> np.ndarray:
        """Returns the raw weights ``1 / p(X_c,j | c_j)``."""
        own = gps.own_probability(xc)
        zero = np.flatnonzero(own <= 0)
        if zero.size:
            raise PositivityError(
                f"Unit {zero[0] + 1} has GPS 0 for its observed category {xc[zero[0]]}; trim the sample first"
            )
        return 1.0 / own

    def estimate(self, y: np.ndarray, xc: np.ndarray, gps: GpsMatrix) -> PotentialOutcomeEstimates:
        raw = self.unit_weights(xc, gps)
        weights = raw if self.weight_cap is None else np.minimum(raw, self.weight_cap)
        capped = 0 if self.weight_cap is None else int(np.sum(raw > self.weight_cap))

        means = np.empty(gps.n_categories)
        effective_sizes = {}
        for column, x in enumerate(gps.category_labels):
            in_x = xc == x
            weighted_sum = float(np.sum(y[in_x] * weights[in_x]))
            denominator = float(np.sum(weights[in_x])) if self.hajek else y.size
            means[column] = weighted_sum / denominator
            effective_sizes[str(x)] = float(np.sum(weights[in_x]) ** 2 / np.sum(weights[in_x] ** 2))

        capped_fraction = capped / y.size
        if capped:
            logger.info(f"IPTW capped {capped} of {y.size} weights ({capped_fraction:.2%}) at {self.weight_cap}")
        return PotentialOutcomeEstimates(
            method=self.method,
            means=means,
            categories=gps.category_labels,
            auxiliary={
                "capped_fraction": capped_fraction,
                "n_capped": capped,
                "effective_sample_size": effective_sizes,
                "weight_cap": self.weight_cap,
                "hajek": self.hajek,
            },
            weights=weights,
        )


def estimate_iptw(
    y: Sequence[float], xc: Sequence[int], gps: GpsMatrix, weight_cap: Optional[float] = 10.0, hajek: bool = False
) -> PotentialOutcomeEstimates:
    """Functional form of :class:`IPTWEstimator`."""
    return IPTWEstimator(weight_cap, hajek)(y, xc, gps)
