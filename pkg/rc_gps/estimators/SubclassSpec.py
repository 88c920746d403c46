from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Sequence

import numpy as np

from rc_gps.util import write_csv_rows


@dataclass
class SubclassSpec:
    """
    Subclasses built from quantiles of each GPS element.

    Args:
        n_subclasses: requested number of subclasses K
        boundaries: per category x, the K - 1 inner quantiles ``q_{x,1} <= ... <= q_{x,K-1}`` of ``p(x | c)``
        labels: matrix of shape (N, n); ``labels[j, x - 1]`` is unit j's final subclass (1-based, after merges)
            for element x
        weights: per category x, the weight given to each final subclass
        merges: one record per merge of a subclass lacking units of the category
    """

    n_subclasses: int
    boundaries: Dict[int, np.ndarray]
    labels: np.ndarray
    weights: Dict[int, np.ndarray]
    merges: List[Dict[str, Any]] = field(default_factory=list)

    def to_csv(self, path: str, index: Optional[Sequence[int]] = None) -> None:
        """
        Writes the final subclass label of every unit for every GPS element. Units are numbered 1..N unless
        ``index`` gives their labels (e.g. row numbers in the untrimmed data).
        """
        categories = sorted(self.boundaries)
        header = ["unit"] + [f"subclass_{x}" for x in categories]
        units = range(1, self.labels.shape[0] + 1) if index is None else index
        rows = ([unit] + list(labels) for unit, labels in zip(units, self.labels))
        write_csv_rows(path, header, rows)
