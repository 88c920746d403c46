from enum import Enum
from typing import List


class SdReference(Enum):
    """
    Denominator of the absolute standardized bias:

    - ``SdReference.POOLED`` (``"pooled"``): standard deviation of the covariate over the whole sample, before any
      design is applied
    - ``SdReference.TREATED`` (``"treated"``): standard deviation of the covariate among the units of the category
    """

    POOLED = "pooled"
    TREATED = "treated"

    @staticmethod
    def possible_values() -> List[str]:
        return [reference.value for reference in SdReference]
