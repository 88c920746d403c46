import logging
from enum import Enum
from typing import Any, Dict, List, Optional, Sequence

import numpy as np
from scipy.special import xlogy

from rc_gps.exceptions import ConvergenceError, InvalidDataError, SchemaError
from rc_gps.util import least_squares

logger = logging.getLogger(__name__)


class Link(Enum):
    """
    Link functions of the outcome model:

    - ``Link.IDENTITY`` (``"identity"``): linear model fitted by weighted least squares; contrasts are differences
    - ``Link.LOG`` (``"log"``): Poisson log-linear model fitted by IRLS, optionally with a person-time offset;
      contrasts are rate ratios
    """

    IDENTITY = "identity"
    LOG = "log"

    @staticmethod
    def possible_values() -> List[str]:
        return [link.value for link in Link]


class OutcomeModel:
    """
    Outcome model ``r(E[Y | X_c, C]) = beta0 + sum_{x >= 2} beta_{1x} I(X_c = x) [+ beta2^T C] [+ stratum effects]``
    with category 1 as reference.

    Strata enter as fixed effects (one indicator per non-baseline level of every stratum column). With the log link
    an offset ``log(person-time)`` can be supplied.

    Args:
        link: the link function. Defaults to ``identity``.
        include_confounders: add the confounders C to the model (beta2). Defaults to False.
        max_iter: maximum number of IRLS iterations for the log link. Defaults to 100.
        tol: IRLS convergence threshold on the relative deviance change. Defaults to 1e-10.
    """

    def __init__(
        self,
        link: Link = Link.IDENTITY,
        include_confounders: bool = False,
        max_iter: int = 100,
        tol: float = 1e-10,
    ):
        self.link = Link(link)
        self.include_confounders = include_confounders
        self.max_iter = max_iter
        self.tol = tol

        self.coef: Optional[np.ndarray] = None
        self.coef_names: List[str] = []
        self.categories: List[int] = []
        self.stratum_levels: List[np.ndarray] = []
        self.deviance: Optional[float] = None
        self.converged = False
        self.iterations = 0
        # set by rc_gps.outcome.fit_outcome_glm
        self.potential_outcomes = None
        self.components: List["OutcomeModel"] = []

    def get_config_dict(self) -> Dict[str, Any]:
        return {
            "link": self.link.value,
            "include_confounders": self.include_confounders,
            "max_iter": self.max_iter,
            "tol": self.tol,
        }

    def clone(self) -> "OutcomeModel":
        return OutcomeModel(**self.get_config_dict())

    @property
    def is_fitted(self) -> bool:
        return self.coef is not None

    def _design(self, xc: np.ndarray, C: Optional[np.ndarray], strata: Optional[np.ndarray]) -> np.ndarray:
        n_rows = xc.size
        columns = [np.ones(n_rows)]
        columns.extend((xc == x).astype(float) for x in self.categories[1:])
        if self.include_confounders:
            if C is None:
                raise SchemaError("The outcome model includes confounders but none were given")
            columns.extend(np.asarray(C, dtype=float).reshape(n_rows, -1).T)
        if self.stratum_levels:
            strata = np.asarray(strata, dtype=float).reshape(n_rows, -1)
            for column, levels in enumerate(self.stratum_levels):
                unknown = ~np.isin(strata[:, column], levels)
                if np.any(unknown):
                    raise SchemaError(f"Stratum value {strata[unknown, column][0]!r} was not seen in the fit")
                columns.extend((strata[:, column] == level).astype(float) for level in levels[1:])
        return np.column_stack(columns)

    def fit(
        self,
        y: np.ndarray,
        xc: np.ndarray,
        weights: Optional[np.ndarray] = None,
        C: Optional[np.ndarray] = None,
        person_time: Optional[np.ndarray] = None,
        strata: Optional[np.ndarray] = None,
        confounder_names: Optional[Sequence[str]] = None,
    ) -> "OutcomeModel":
        """
        Fits the model and returns ``self``. Categories without units in ``xc`` get no indicator column.

        Args:
            y: outcomes (counts or rates for the log link, nonnegative)
            xc: exposure categories
            weights: nonnegative observation weights. Defaults to unit weights.
            C: confounder matrix, used when ``include_confounders`` is set
            person_time: positive person-time; its log enters as offset (log link only)
            strata: matrix of stratum columns, entered as fixed effects
            confounder_names: names used for the beta2 coefficients

        Raises:
            InvalidDataError: on nonpositive person-time or negative outcomes under the log link
            ConvergenceError: if IRLS does not converge in ``max_iter`` iterations
            SingularDesignError: if the design is rank deficient
        """
        y = np.asarray(y, dtype=float)
        xc = np.asarray(xc, dtype=int)
        self.categories = sorted(int(x) for x in np.unique(xc))
        if strata is not None:
            strata = np.asarray(strata, dtype=float).reshape(y.size, -1)
            self.stratum_levels = [np.unique(strata[:, column]) for column in range(strata.shape[1])]
        else:
            self.stratum_levels = []
        X = self._design(xc, C, strata)

        self.coef_names = ["intercept"] + [f"category_{x}" for x in self.categories[1:]]
        if self.include_confounders:
            n_confounders = X.shape[1] - len(self.categories) - sum(levels.size - 1 for levels in self.stratum_levels)
            if confounder_names is None:
                confounder_names = [f"c{idx}" for idx in range(1, n_confounders + 1)]
            self.coef_names += list(confounder_names)
        for column, levels in enumerate(self.stratum_levels):
            self.coef_names += [f"stratum{column + 1}_{level:g}" for level in levels[1:]]

        if self.link == Link.IDENTITY:
            fit = least_squares(X, y, weights=weights, column_names=self.coef_names)
            self.coef = fit.coef
            self.deviance = fit.rss
            self.converged = True
            self.iterations = 1
        else:
            offset = np.zeros(y.size)
            if person_time is not None:
                person_time = np.asarray(person_time, dtype=float)
                if np.any(person_time <= 0):
                    raise InvalidDataError("Person-time must be positive for the log-link offset")
                offset = np.log(person_time)
            if np.any(y < 0):
                raise InvalidDataError("The log-link outcome model requires nonnegative outcomes")
            self._fit_irls(X, y, np.ones(y.size) if weights is None else np.asarray(weights, dtype=float), offset)
        return self

    def _fit_irls(self, X: np.ndarray, y: np.ndarray, weights: np.ndarray, offset: np.ndarray) -> None:
        mu = y + 0.1
        eta = np.log(mu) - offset
        deviance = np.inf
        for iteration in range(1, self.max_iter + 1):
            working_response = eta + (y - mu) / mu
            fit = least_squares(X, working_response, weights=weights * mu, column_names=self.coef_names)
            eta = X @ fit.coef
            mu = np.exp(eta + offset)
            new_deviance = 2.0 * float(np.sum(weights * (xlogy(y, y / mu) - (y - mu))))
            logger.debug(f"IRLS iteration {iteration}: deviance {new_deviance:.10g}")
            if abs(new_deviance - deviance) / (abs(new_deviance) + 0.1) < self.tol:
                self.coef = fit.coef
                self.deviance = new_deviance
                self.converged = True
                self.iterations = iteration
                return
            deviance = new_deviance
        raise ConvergenceError(f"Log-link outcome model did not converge in {self.max_iter} IRLS iterations")

    def predict(
        self, xc: np.ndarray, C: Optional[np.ndarray] = None, strata: Optional[np.ndarray] = None
    ) -> np.ndarray:
        """Mean outcome per row on the response scale; for the log link per unit of person-time."""
        if not self.is_fitted:
            raise ValueError("The outcome model has not been fitted")
        xc = np.asarray(xc, dtype=int)
        unknown = ~np.isin(xc, self.categories)
        if np.any(unknown):
            raise SchemaError(f"Category {xc[unknown][0]} was not present when fitting the outcome model")
        linear = self._design(xc, C, strata) @ self.coef
        return linear if self.link == Link.IDENTITY else np.exp(linear)

    def standardized_mean(
        self,
        x: int,
        n_rows: int,
        C: Optional[np.ndarray] = None,
        strata: Optional[np.ndarray] = None,
        weights: Optional[np.ndarray] = None,
    ) -> float:
        """Average prediction over the given rows with everyone's category set to ``x``."""
        predictions = self.predict(np.full(n_rows, int(x)), C, strata)
        return float(np.average(predictions, weights=weights))

    def summary(self) -> Dict[str, float]:
        if not self.is_fitted:
            return {}
        return dict(zip(self.coef_names, self.coef.tolist()))

    def __repr__(self) -> str:
        return "OutcomeModel({})".format(self.get_config_dict())
