import logging
from typing import Sequence, Tuple

import numpy as np

from rc_gps.estimators.EstimationMethod import EstimationMethod
from rc_gps.estimators.PotentialOutcomeEstimates import PotentialOutcomeEstimates
from rc_gps.exceptions import InvalidDataError
from rc_gps.gps import check_categories
from rc_gps.models.GpsMatrix import GpsMatrix

logger = logging.getLogger(__name__)


class GPSEstimator:
    """
    Base class for all GPS implementations.

    Extend this class and implement :meth:`estimate`; calling the estimator validates the inputs first.
    """

    method: EstimationMethod = None

    def __call__(self, y: Sequence[float], xc: Sequence[int], gps: GpsMatrix) -> PotentialOutcomeEstimates:
        """
        Estimates ``E[Y(x)]`` for every exposure category.

        Args:
            y: observed outcomes, length N
            xc: observed exposure categories in ``1..n``, length N
            gps: GPS matrix with N rows and n columns

        Returns:
            PotentialOutcomeEstimates: the means and the estimator's audit information
        """
        y, xc = self.check_inputs(y, xc, gps)
        return self.estimate(y, xc, gps)

    def estimate(self, y: np.ndarray, xc: np.ndarray, gps: GpsMatrix) -> PotentialOutcomeEstimates:
        raise NotImplementedError()

    @staticmethod
    def check_inputs(y: Sequence[float], xc: Sequence[int], gps: GpsMatrix) -> Tuple[np.ndarray, np.ndarray]:
        y = np.asarray(y, dtype=float)
        if y.ndim != 1 or y.size != gps.n_rows:
            raise InvalidDataError(f"Outcome vector has {y.size} entries, GPS matrix has {gps.n_rows} rows")
        if not np.all(np.isfinite(y)):
            raise InvalidDataError("Outcomes must be finite")
        if len(xc) != gps.n_rows:
            raise InvalidDataError(f"Exposure vector has {len(xc)} entries, GPS matrix has {gps.n_rows} rows")
        xc, _ = check_categories(xc, gps.n_categories)
        return y, xc

    def get_config_dict(self):
        return {}

    def __repr__(self) -> str:
        return "{}({})".format(self.__class__.__name__, self.get_config_dict())
