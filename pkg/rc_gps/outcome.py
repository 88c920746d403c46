"""
Average treatment effect contrasts between exposure categories, and GLM outcome models fitted on the design each
GPS implementation produces.
"""

import json
import logging
from dataclasses import asdict, dataclass, field
from enum import Enum
from typing import Any, Dict, Iterable, List, Optional, Sequence, Union

import numpy as np

from rc_gps.estimators import EstimationMethod, PotentialOutcomeEstimates
from rc_gps.exceptions import InvalidDataError, ScaleUnavailableError
from rc_gps.models.OutcomeModel import Link, OutcomeModel
from rc_gps.tabular import ColumnRole, TabularDataset
from rc_gps.util import write_csv_rows, write_json

logger = logging.getLogger(__name__)


class ContrastScale(Enum):
    """
    Scales of an average treatment effect ``ATE(x'; x)``:

    - ``ContrastScale.DIFFERENCE`` (``"difference"``): ``E[Y(x')] - E[Y(x)]``
    - ``ContrastScale.RATIO`` (``"ratio"``): ``E[Y(x')] / E[Y(x)]`` (an incidence rate ratio under the log link)
    """

    DIFFERENCE = "difference"
    RATIO = "ratio"

    @staticmethod
    def possible_values() -> List[str]:
        return [scale.value for scale in ContrastScale]


@dataclass
class AteRow:
    x_prime: int
    x: int
    scale: ContrastScale
    estimate: float
    method: str
    se: Optional[float] = None
    ci_lower: Optional[float] = None
    ci_upper: Optional[float] = None

    def to_dict(self) -> Dict[str, Any]:
        row = asdict(self)
        row["scale"] = self.scale.value
        return row


CSV_HEADER = ["x_prime", "x", "scale", "estimate", "se", "ci_lower", "ci_upper", "method"]


@dataclass
class AteTable:
    """
    Pairwise contrasts of potential-outcome means. Rows are ordered by scale, then ``x'``, then ``x``.

    Bootstrap tables also carry the replicate matrix (one row per successful replicate, one column per contrast
    row) and the log of failed replicates.
    """

    rows: List[AteRow]
    replicates: Optional[np.ndarray] = None
    failures: List[Dict[str, Any]] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.rows)

    def __iter__(self):
        return iter(self.rows)

    def get(self, x_prime: int, x: int, scale: Union[str, ContrastScale] = ContrastScale.DIFFERENCE) -> AteRow:
        scale = ContrastScale(scale)
        for row in self.rows:
            if row.x_prime == x_prime and row.x == x and row.scale == scale:
                return row
        raise KeyError(f"No {scale.value} contrast ({x_prime}, {x}) in the table")

    @property
    def estimates(self) -> np.ndarray:
        return np.array([row.estimate for row in self.rows])

    def to_dict(self) -> Dict[str, Any]:
        payload = {"rows": [row.to_dict() for row in self.rows]}
        if self.replicates is not None:
            payload["n_replicates"] = int(self.replicates.shape[0])
            payload["failures"] = self.failures
        return payload

    def to_csv(self, path: str) -> None:
        write_csv_rows(path, CSV_HEADER, ([getattr(row, name) for name in CSV_HEADER] for row in self.rows))

    def to_json(self, path: str) -> None:
        write_json(path, self.to_dict())

    def replicates_to_csv(self, path: str) -> None:
        if self.replicates is None:
            raise ValueError("This table has no bootstrap replicates")
        header = ["replicate"] + [f"{row.scale.value}_{row.x_prime}_{row.x}" for row in self.rows]
        write_csv_rows(path, header, ([idx] + list(values) for idx, values in enumerate(self.replicates, start=1)))

    def __str__(self) -> str:
        return json.dumps(self.to_dict()["rows"], indent=2, default=str)


def contrast_pairs(categories: Sequence[int], reference: Optional[int] = None) -> List[tuple]:
    if reference is not None:
        if reference not in categories:
            raise ValueError(f"Reference category {reference} is not among {list(categories)}")
        return [(x_prime, reference) for x_prime in categories if x_prime != reference]
    return [(x_prime, x) for x_prime in categories for x in categories if x_prime != x]


def ate_contrasts(
    est: PotentialOutcomeEstimates,
    scales: Iterable[Union[str, ContrastScale]] = (ContrastScale.DIFFERENCE, ContrastScale.RATIO),
    reference: Optional[int] = None,
) -> AteTable:
    """
    Computes ``ATE(x'; x)`` for all ordered pairs ``x' != x`` (or against ``reference`` only).

    Args:
        est: potential-outcome means
        scales: contrast scales to compute. Defaults to difference and ratio.
        reference: if given, only contrasts against this category

    Returns:
        AteTable: point estimates without standard errors

    Raises:
        ScaleUnavailableError: if a ratio is requested and some mean is not positive

    Example:
        ::

            table = ate_contrasts(estimates, scales=["difference"])
            table.get(2, 1).estimate
    """
    scales = [ContrastScale(scale) for scale in scales]
    if not np.all(np.isfinite(est.means)):
        raise InvalidDataError("Potential-outcome means must be finite")
    pairs = contrast_pairs(est.categories, reference)
    rows = []
    for scale in scales:
        for x_prime, x in pairs:
            numerator, denominator = est.mean(x_prime), est.mean(x)
            if scale == ContrastScale.DIFFERENCE:
                value = numerator - denominator
            else:
                if numerator <= 0 or denominator <= 0:
                    raise ScaleUnavailableError(
                        f"Ratio contrast ({x_prime}, {x}) needs positive means, got {numerator!r} and {denominator!r}"
                    )
                value = numerator / denominator
            rows.append(AteRow(x_prime, x, scale, float(value), est.method.value))
    return AteTable(rows)


def fit_outcome_glm(
    dataset: TabularDataset, estimates: PotentialOutcomeEstimates, spec: Optional[OutcomeModel] = None
) -> OutcomeModel:
    """
    Fits the outcome model on the design of the GPS implementation that produced ``estimates`` and attaches the
    standardized potential-outcome means as ``model.potential_outcomes``.

    - IPTW: weighted GLM on the original rows, weighted by the capped inverse GPS.
    - Subclassification: for every GPS element x a GLM per subclass, combining the subclass predictions for x with
      the subclass weights.
    - Matching: GLM on the replicated matched sample (for every category x the N matched donors).

    Potential-outcome means are averages of the model predictions with every unit's category set to x; under the
    log link they are rates per unit of person-time.

    Args:
        dataset: the rows ``estimates`` was computed on; needs roles ``outcome`` and ``categorical_exposure``, and
            uses ``confounder``, ``offset``, ``stratum`` and ``weight`` when present; observation weights multiply the
            weights of the design
        estimates: output of a GPS estimator, carrying its design
        spec: the outcome model specification. Defaults to an identity-link model without confounders.

    Returns:
        OutcomeModel: the fitted model; for subclassification the per-subclass fits are in ``model.components``
    """
    spec = spec or OutcomeModel()
    y = dataset.role_values(ColumnRole.OUTCOME)
    xc = dataset.role_values(ColumnRole.CATEGORICAL_EXPOSURE).astype(int)
    C = dataset.role_matrix(ColumnRole.CONFOUNDER) if spec.include_confounders else None
    confounder_names = dataset.role_columns(ColumnRole.CONFOUNDER)
    person_time = dataset.role_values(ColumnRole.OFFSET) if dataset.has_role(ColumnRole.OFFSET) else None
    strata = dataset.role_matrix(ColumnRole.STRATUM) if dataset.has_role(ColumnRole.STRATUM) else None
    observation = dataset.role_values(ColumnRole.WEIGHT) if dataset.has_role(ColumnRole.WEIGHT) else None
    design_rows = [
        array.shape[0]
        for array in (
            estimates.weights,
            None if estimates.subclasses is None else estimates.subclasses.labels,
            None if estimates.matches is None else estimates.matches.donors_for(estimates.categories[0]),
        )
        if array is not None
    ]
    if any(n_rows != y.size for n_rows in design_rows):
        raise InvalidDataError(f"Dataset has {y.size} rows but the estimates were computed on {design_rows[0]}")

    def rows(index: np.ndarray, array: Optional[np.ndarray]) -> Optional[np.ndarray]:
        return None if array is None else array[index]

    means = np.empty(estimates.n_categories)
    model = spec.clone()

    if estimates.method == EstimationMethod.IPTW:
        if estimates.weights is None:
            raise InvalidDataError("IPTW estimates carry no weights")
        weights = estimates.weights if observation is None else estimates.weights * observation
        model.fit(y, xc, weights, C, person_time, strata, confounder_names)
        for column, x in enumerate(estimates.categories):
            means[column] = model.standardized_mean(x, y.size, C, strata, weights)

    elif estimates.method == EstimationMethod.MATCHING:
        matches = estimates.matches
        if matches is None:
            raise InvalidDataError("Matching estimates carry no match assignment")
        donors = np.concatenate([matches.donors_for(x) for x in estimates.categories])
        matched_xc = np.repeat(estimates.categories, y.size)
        model.fit(
            y[donors],
            matched_xc,
            weights=rows(donors, observation),
            C=rows(donors, C),
            person_time=rows(donors, person_time),
            strata=rows(donors, strata),
            confounder_names=confounder_names,
        )
        for column, x in enumerate(estimates.categories):
            means[column] = model.standardized_mean(
                x, donors.size, rows(donors, C), rows(donors, strata), rows(donors, observation)
            )

    else:
        subclasses = estimates.subclasses
        if subclasses is None:
            raise InvalidDataError("Subclassification estimates carry no subclasses")
        for column, x in enumerate(estimates.categories):
            labels = subclasses.labels[:, column]
            total = 0.0
            for label, weight in enumerate(subclasses.weights[x], start=1):
                index = np.flatnonzero(labels == label)
                component = spec.clone().fit(
                    y[index],
                    xc[index],
                    weights=rows(index, observation),
                    C=rows(index, C),
                    person_time=rows(index, person_time),
                    strata=rows(index, strata),
                    confounder_names=confounder_names,
                )
                total += weight * component.standardized_mean(
                    x, index.size, rows(index, C), rows(index, strata), rows(index, observation)
                )
                model.components.append(component)
            means[column] = total

    model.potential_outcomes = PotentialOutcomeEstimates(
        method=estimates.method,
        means=means,
        categories=estimates.categories,
        auxiliary={**estimates.auxiliary, "outcome_link": spec.link.value},
        weights=estimates.weights,
        subclasses=estimates.subclasses,
        matches=estimates.matches,
    )
    logger.info(
        f"Outcome model ({spec.link.value} link, {estimates.method.value} design): potential-outcome means "
        + ", ".join(f"E[Y({x})]={mean:.4g}" for x, mean in zip(estimates.categories, means))
    )
    return model


def default_scales(link: Union[str, Link]) -> List[ContrastScale]:
    """Differences for the identity link, ratios for the log link."""
    return [ContrastScale.DIFFERENCE] if Link(link) == Link.IDENTITY else [ContrastScale.RATIO]
