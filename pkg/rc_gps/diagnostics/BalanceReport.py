import json
import logging
from dataclasses import asdict, dataclass, field
from typing import Any, Dict, List, Optional, Sequence, Union

import numpy as np

from rc_gps.diagnostics.SdReference import SdReference
from rc_gps.estimators import EstimationMethod, MatchAssignment, PotentialOutcomeEstimates
from rc_gps.exceptions import ConstantCovariateError, InvalidDataError
from rc_gps.util import write_csv_rows, write_json

logger = logging.getLogger(__name__)


def _confounder_names(C: np.ndarray, names: Optional[Sequence[str]]) -> List[str]:
    if names is None:
        return [f"c{idx}" for idx in range(1, C.shape[1] + 1)]
    if len(names) != C.shape[1]:
        raise InvalidDataError(f"Got {len(names)} confounder names for {C.shape[1]} columns")
    return list(names)


def asb(
    C: np.ndarray,
    xc: Sequence[int],
    x: int,
    weights: Optional[np.ndarray] = None,
    subclass_labels: Optional[np.ndarray] = None,
    matches: Optional[MatchAssignment] = None,
    sd_reference: Union[str, SdReference] = SdReference.POOLED,
    confounder_names: Optional[Sequence[str]] = None,
) -> np.ndarray:
    """
    Absolute standardized bias of every confounder when GPS element x is treated as a binary propensity score,
    comparing the units with ``X_c = x`` to those with ``X_c != x``.

    At most one design may be given; without one the raw group means are compared.

    - ``weights``: weighted group means (e.g. the capped IPTW weights)
    - ``subclass_labels``: the final subclass of every unit for element x; differences are taken within each
      subclass holding units of both groups and averaged with weights ``N_k / N``
    - ``matches``: every unit with ``X_c != x`` is compared with its matched donor from category x

    The denominator is computed on the rows as given, before the design is applied.

    Args:
        C: confounder matrix of shape (N, p)
        xc: exposure categories
        x: the category defining the treated group
        weights: unit weights
        subclass_labels: subclass labels of element x
        matches: nearest-neighbor match assignment
        sd_reference: denominator, see :class:`SdReference`. Defaults to the pooled standard deviation.
        confounder_names: names used in error messages

    Returns:
        np.ndarray: one nonnegative value per confounder

    Raises:
        InvalidDataError: if either group is empty under the design
        ConstantCovariateError: if the denominator of some confounder is zero
    """
    C = np.asarray(C, dtype=float)
    if C.ndim == 1:
        C = C.reshape(-1, 1)
    xc = np.asarray(xc, dtype=int)
    if C.shape[0] != xc.size:
        raise InvalidDataError(f"Confounder matrix has {C.shape[0]} rows, exposure vector has {xc.size}")
    if sum(design is not None for design in (weights, subclass_labels, matches)) > 1:
        raise ValueError("Pass at most one of weights, subclass_labels and matches")
    names = _confounder_names(C, confounder_names)

    in_x = xc == x
    if not in_x.any() or in_x.all():
        raise InvalidDataError(f"Balance for category {x} needs units both in and outside the category")

    sd_reference = SdReference(sd_reference)
    reference_rows = C if sd_reference == SdReference.POOLED else C[in_x]
    if reference_rows.shape[0] < 2:
        raise ConstantCovariateError(f"Category {x} has a single unit; its standard deviation is undefined")
    sd = np.std(reference_rows, axis=0, ddof=1)
    constant = np.flatnonzero(~(sd > 0))
    if constant.size:
        raise ConstantCovariateError(f"Confounder {names[constant[0]]!r} is constant; standardized bias is undefined")

    if weights is not None:
        weights = np.asarray(weights, dtype=float)
        if weights[in_x].sum() <= 0 or weights[~in_x].sum() <= 0:
            raise InvalidDataError(f"The weights leave a group of category {x} with zero total weight")
        difference = np.average(C[in_x], axis=0, weights=weights[in_x]) - np.average(
            C[~in_x], axis=0, weights=weights[~in_x]
        )
    elif subclass_labels is not None:
        subclass_labels = np.asarray(subclass_labels)
        differences, sizes = [], []
        for label in np.unique(subclass_labels):
            in_subclass = subclass_labels == label
            treated, comparison = in_subclass & in_x, in_subclass & ~in_x
            if treated.any() and comparison.any():
                differences.append(C[treated].mean(axis=0) - C[comparison].mean(axis=0))
                sizes.append(in_subclass.sum())
        if not differences:
            raise InvalidDataError(f"No subclass of element {x} holds units both in and outside the category")
        difference = np.average(np.array(differences), axis=0, weights=sizes)
    elif matches is not None:
        donors = matches.donors_for(x)[~in_x]
        difference = C[donors].mean(axis=0) - C[~in_x].mean(axis=0)
    else:
        difference = C[in_x].mean(axis=0) - C[~in_x].mean(axis=0)

    return np.abs(difference) / sd


@dataclass
class BalanceRow:
    confounder: str
    category: int
    asb_before: float
    asb_after: float


@dataclass
class BalanceReport:
    """
    Absolute standardized biases of every (confounder, GPS element) pair before and after a GPS implementation.

    Args:
        method: the GPS implementation whose design gives ``asb_after``
        rows: one row per confounder and category
        kept_fraction: share of units kept by trimming
        sd_reference: the denominator used
    """

    method: EstimationMethod
    rows: List[BalanceRow] = field(default_factory=list)
    kept_fraction: float = 1.0
    sd_reference: SdReference = SdReference.POOLED

    def get(self, confounder: str, category: int) -> BalanceRow:
        for row in self.rows:
            if row.confounder == confounder and row.category == category:
                return row
        raise KeyError(f"No balance row for ({confounder!r}, {category})")

    @property
    def confounders(self) -> List[str]:
        return list(dict.fromkeys(row.confounder for row in self.rows))

    def n_improved(self, category: Optional[int] = None) -> int:
        """Number of confounders whose ASB after the design is below the ASB before (averaged over categories)."""
        improved = 0
        for confounder in self.confounders:
            rows = [row for row in self.rows if row.confounder == confounder]
            if category is not None:
                rows = [row for row in rows if row.category == category]
            if rows and np.mean([row.asb_after for row in rows]) < np.mean([row.asb_before for row in rows]):
                improved += 1
        return improved

    def max_asb(self, after: bool = True) -> float:
        return max(row.asb_after if after else row.asb_before for row in self.rows)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "method": self.method.value,
            "kept_fraction": self.kept_fraction,
            "sd_reference": self.sd_reference.value,
            "rows": [asdict(row) for row in self.rows],
        }

    def to_csv(self, path: str) -> None:
        write_csv_rows(
            path,
            ["confounder", "category", "asb_before", "asb_after", "method"],
            ([row.confounder, row.category, row.asb_before, row.asb_after, self.method.value] for row in self.rows),
        )

    def to_json(self, path: str) -> None:
        write_json(path, self.to_dict())

    def __str__(self) -> str:
        return json.dumps(self.to_dict(), indent=2)


def balance_report(
    C: np.ndarray,
    confounder_names: Optional[Sequence[str]],
    xc: Sequence[int],
    estimates: PotentialOutcomeEstimates,
    kept_fraction: float = 1.0,
    sd_reference: Union[str, SdReference] = SdReference.POOLED,
) -> BalanceReport:
    """
    Balance before and after the design of the GPS implementation that produced ``estimates``: capped weights for
    IPTW, subclass labels for subclassification, the matched sample for matching.

    ``C`` and ``xc`` must be the rows the estimator ran on (after trimming).
    """
    C = np.asarray(C, dtype=float)
    if C.ndim == 1:
        C = C.reshape(-1, 1)
    names = _confounder_names(C, confounder_names)
    sd_reference = SdReference(sd_reference)
    report = BalanceReport(estimates.method, kept_fraction=kept_fraction, sd_reference=sd_reference)

    for column, x in enumerate(estimates.categories):
        design = {}
        if estimates.method == EstimationMethod.IPTW:
            design["weights"] = estimates.weights
        elif estimates.method == EstimationMethod.SUBCLASSIFICATION:
            design["subclass_labels"] = estimates.subclasses.labels[:, column]
        else:
            design["matches"] = estimates.matches
        before = asb(C, xc, x, sd_reference=sd_reference, confounder_names=names)
        after = asb(C, xc, x, sd_reference=sd_reference, confounder_names=names, **design)
        for name, value_before, value_after in zip(names, before, after):
            report.rows.append(BalanceRow(name, int(x), float(value_before), float(value_after)))

    logger.info(
        f"Balance ({estimates.method.value}): max ASB {report.max_asb(after=False):.3f} before, "
        f"{report.max_asb():.3f} after; {report.n_improved()} of {len(names)} confounders improved"
    )
    return report
