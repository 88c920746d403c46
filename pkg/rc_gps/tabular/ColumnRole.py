from enum import Enum
from typing import List


class ColumnRole(Enum):
    """
    Roles a column can play in a :class:`~rc_gps.tabular.TabularDataset`. The following roles are supported:

    - ``ColumnRole.OUTCOME`` (``"outcome"``): the observed outcome Y
    - ``ColumnRole.TRUE_EXPOSURE`` (``"true_exposure"``): the error-free continuous exposure X
    - ``ColumnRole.ERROR_PRONE_EXPOSURE`` (``"error_prone_exposure"``): the error-prone continuous exposure W
    - ``ColumnRole.CATEGORICAL_EXPOSURE`` (``"categorical_exposure"``): an exposure category in 1..n
    - ``ColumnRole.CONFOUNDER`` (``"confounder"``): confounders C entering the GPS model
    - ``ColumnRole.CALIBRATION_COVARIATE`` (``"calibration_covariate"``): covariates D of the calibration model
    - ``ColumnRole.OFFSET`` (``"offset"``): person-time for log-linear outcome models
    - ``ColumnRole.STRATUM`` (``"stratum"``): stratification variables of the outcome model
    - ``ColumnRole.REGION_ID`` (``"region_id"``): region identifier used to join aggregated grid values
    - ``ColumnRole.WEIGHT`` (``"weight"``): nonnegative observation weights of the outcome model
    """

    OUTCOME = "outcome"
    TRUE_EXPOSURE = "true_exposure"
    ERROR_PRONE_EXPOSURE = "error_prone_exposure"
    CATEGORICAL_EXPOSURE = "categorical_exposure"
    CONFOUNDER = "confounder"
    CALIBRATION_COVARIATE = "calibration_covariate"
    OFFSET = "offset"
    STRATUM = "stratum"
    REGION_ID = "region_id"
    WEIGHT = "weight"

    @staticmethod
    def possible_values() -> List[str]:
        return [role.value for role in ColumnRole]

    @property
    def is_multi_column(self) -> bool:
        return self in (ColumnRole.CONFOUNDER, ColumnRole.CALIBRATION_COVARIATE, ColumnRole.STRATUM)
