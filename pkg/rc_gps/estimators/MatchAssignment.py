from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence

import numpy as np

from rc_gps.util import write_csv_rows


@dataclass
class MatchAssignment:
    """
    Nearest-neighbor matches with replacement: ``donors[x][j]`` is the 0-based index of the unit with exposure
    category x whose GPS element ``p(x | c)`` is closest to unit j's, and ``distances[x][j]`` the absolute GPS
    difference.
    """

    donors: Dict[int, np.ndarray]
    distances: Dict[int, np.ndarray]

    @property
    def categories(self) -> List[int]:
        return sorted(self.donors)

    def donors_for(self, x: int) -> np.ndarray:
        return self.donors[int(x)]

    def summary(self) -> Dict[str, float]:
        stats = {}
        for x in self.categories:
            distances = self.distances[x]
            donors = self.donors[x]
            stats[f"mean_distance_{x}"] = float(distances.mean())
            stats[f"max_distance_{x}"] = float(distances.max())
            stats[f"distinct_donors_{x}"] = int(np.unique(donors).size)
        return stats

    def to_csv(self, path: str, index: Optional[Sequence[int]] = None) -> None:
        """
        One row per (unit, category) with 1-based unit and donor numbers, or with the labels ``index[j]`` (e.g. row
        numbers in the untrimmed data) when given.
        """
        labels = np.arange(1, len(self.donors[self.categories[0]]) + 1) if index is None else np.asarray(index)

        def rows():
            for x in self.categories:
                for unit, donor, distance in zip(labels, self.donors[x], self.distances[x]):
                    yield [unit, x, labels[donor], distance]

        write_csv_rows(path, ["unit", "category", "donor", "distance"], rows())
