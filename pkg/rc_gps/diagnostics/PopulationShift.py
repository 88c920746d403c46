from dataclasses import asdict, dataclass
from typing import Any, Dict, List, Optional, Sequence

import numpy as np

from rc_gps.exceptions import InvalidDataError
from rc_gps.util import write_csv_rows


@dataclass
class ShiftRow:
    confounder: str
    mean_full: float
    sd_full: float
    mean_kept: float
    sd_kept: float
    standardized_shift: float


@dataclass
class PopulationShift:
    """
    Confounder means and standard deviations of the full sample and of the units kept by trimming. Trimming changes
    the population the effects refer to; ``standardized_shift`` is ``(mean_kept - mean_full) / sd_full``.
    """

    rows: List[ShiftRow]
    n_full: int
    n_kept: int

    @property
    def kept_fraction(self) -> float:
        return self.n_kept / self.n_full

    def to_dict(self) -> Dict[str, Any]:
        return {"n_full": self.n_full, "n_kept": self.n_kept, "rows": [asdict(row) for row in self.rows]}

    def to_csv(self, path: str) -> None:
        header = ["confounder", "mean_full", "sd_full", "mean_kept", "sd_kept", "standardized_shift"]
        write_csv_rows(path, header, ([getattr(row, name) for name in header] for row in self.rows))


def population_shift(
    C: np.ndarray, confounder_names: Optional[Sequence[str]], kept_index: Sequence[int]
) -> PopulationShift:
    """
    Compares the confounder distribution before and after trimming.

    Args:
        C: confounder matrix of the full sample, shape (N, p)
        confounder_names: column names. Defaults to ``c1..cp``.
        kept_index: 0-based indices of the kept units

    Returns:
        PopulationShift: one row per confounder
    """
    C = np.asarray(C, dtype=float)
    if C.ndim == 1:
        C = C.reshape(-1, 1)
    kept_index = np.asarray(kept_index, dtype=int)
    if kept_index.size == 0:
        raise InvalidDataError("No kept units to compare with the full sample")
    if confounder_names is None:
        confounder_names = [f"c{idx}" for idx in range(1, C.shape[1] + 1)]

    full_mean, full_sd = C.mean(axis=0), C.std(axis=0, ddof=1)
    kept = C[kept_index]
    kept_mean = kept.mean(axis=0)
    kept_sd = kept.std(axis=0, ddof=1) if kept.shape[0] > 1 else np.zeros(C.shape[1])
    with np.errstate(divide="ignore", invalid="ignore"):
        shift = np.where(full_sd > 0, (kept_mean - full_mean) / full_sd, 0.0)

    rows = [
        ShiftRow(name, float(mf), float(sf), float(mk), float(sk), float(d))
        for name, mf, sf, mk, sk, d in zip(confounder_names, full_mean, full_sd, kept_mean, kept_sd, shift)
    ]
    return PopulationShift(rows, n_full=C.shape[0], n_kept=int(kept_index.size))
