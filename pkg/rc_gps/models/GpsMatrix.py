import logging
from typing import Iterable, Optional, Sequence

import numpy as np

from rc_gps.exceptions import InvalidDataError, SchemaError
from rc_gps.util import write_csv_rows

logger = logging.getLogger(__name__)


class GpsMatrix:
    """
    Generalized propensity scores: row ``j`` holds ``p(x | c_j)`` for the categories ``x = 1..n``.

    Args:
        probs: matrix of shape (N, n) with nonnegative rows summing to one
        category_labels: labels of the columns. Defaults to ``1..n``.
        atol: tolerance of the row-sum check. Defaults to 1e-10.
    """

    def __init__(self, probs: np.ndarray, category_labels: Optional[Sequence[int]] = None, atol: float = 1e-10):
        probs = np.array(probs, dtype=float, copy=True)
        if probs.ndim != 2 or probs.shape[1] < 2:
            raise SchemaError(f"GPS matrix must have shape (N, n) with n >= 2, got {probs.shape}")
        if not np.all(np.isfinite(probs)) or np.any(probs < 0):
            raise InvalidDataError("GPS entries must be finite and nonnegative")
        row_sums = probs.sum(axis=1)
        if probs.shape[0] and np.max(np.abs(row_sums - 1.0)) > atol:
            worst = row_sums[np.argmax(np.abs(row_sums - 1.0))]
            raise InvalidDataError(f"GPS rows must sum to 1, worst row sums to {worst!r}")
        probs.flags.writeable = False
        self.probs = probs
        if category_labels is None:
            category_labels = range(1, probs.shape[1] + 1)
        self.category_labels = [int(label) for label in category_labels]
        if len(self.category_labels) != probs.shape[1]:
            raise SchemaError("category_labels must have one label per column")

    @property
    def n_rows(self) -> int:
        return self.probs.shape[0]

    @property
    def n_categories(self) -> int:
        return self.probs.shape[1]

    def __len__(self) -> int:
        return self.n_rows

    def element(self, x: int) -> np.ndarray:
        """The GPS element ``p(x | c_j)`` for all units."""
        return self.probs[:, self.category_labels.index(int(x))]

    def own_probability(self, xc: Iterable[int]) -> np.ndarray:
        """``p(X_c,j | c_j)``: each unit's probability of the category it was observed in."""
        xc = np.asarray(xc, dtype=int)
        if xc.size != self.n_rows:
            raise SchemaError(f"Exposure vector has {xc.size} entries, GPS matrix has {self.n_rows} rows")
        if not np.all(np.isin(xc, self.category_labels)):
            raise InvalidDataError(f"Exposure categories must be among {self.category_labels}")
        columns = np.searchsorted(self.category_labels, xc)
        return self.probs[np.arange(self.n_rows), columns]

    def subset(self, indices: Iterable[int]) -> "GpsMatrix":
        return GpsMatrix(self.probs[np.asarray(indices, dtype=int)], self.category_labels)

    def to_csv(self, path: str, index: Optional[Iterable[int]] = None, prefix: str = "p") -> None:
        """Writes one column per GPS element (``p1``, ``p2``, ...), preceded by a ``row`` column."""
        index = np.arange(1, self.n_rows + 1) if index is None else np.asarray(index)
        header = ["row"] + [f"{prefix}{label}" for label in self.category_labels]
        write_csv_rows(path, header, ([idx] + list(row) for idx, row in zip(index, self.probs)))

    def __repr__(self) -> str:
        return f"GpsMatrix(n_rows={self.n_rows}, categories={self.category_labels})"
