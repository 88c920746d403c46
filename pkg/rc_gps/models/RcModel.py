import json
import logging
import os
from typing import Any, Dict, Iterable, Optional, Sequence, Union

import numpy as np

from rc_gps.exceptions import InvalidDataError
from rc_gps.tabular import ColumnRole, TabularDataset
from rc_gps.util import make_rng

logger = logging.getLogger(__name__)


class RcModel:
    """
    A fitted linear regression calibration model ``E(X | W, D) = gamma0 + gamma1 W + gamma2^T D`` with constant
    residual variance.

    Instances are immutable: :meth:`perturbed` returns a new model.

    Args:
        gamma0: intercept
        gamma1: coefficient on the error-prone exposure W
        gamma2: coefficients on the calibration covariates, in the order of ``covariate_names``
        covariate_names: names of the calibration covariate columns D
        residual_variance: estimate of Var(X | W, D)
        r_squared: coefficient of determination of the fit
        standard_errors: classical OLS standard errors of ``(gamma0, gamma1, *gamma2)``
        n_obs: number of validation rows used in the fit
        exposure_name: name of the error-prone exposure column used in the fit
    """

    def __init__(
        self,
        gamma0: float,
        gamma1: float,
        gamma2: Iterable[float] = (),
        covariate_names: Sequence[str] = (),
        residual_variance: float = 0.0,
        r_squared: float = 1.0,
        standard_errors: Optional[Iterable[float]] = None,
        n_obs: int = 0,
        exposure_name: Optional[str] = None,
    ):
        self.gamma0 = float(gamma0)
        self.gamma1 = float(gamma1)
        self.gamma2 = np.asarray(list(gamma2), dtype=float)
        self.covariate_names = [str(name) for name in covariate_names]
        if self.gamma2.size != len(self.covariate_names):
            raise ValueError(
                f"gamma2 has {self.gamma2.size} entries but {len(self.covariate_names)} covariate names were given"
            )
        if residual_variance < 0:
            raise ValueError("residual_variance must be nonnegative")
        self.residual_variance = float(residual_variance)
        self.r_squared = float(r_squared)
        self.standard_errors = None if standard_errors is None else np.asarray(list(standard_errors), dtype=float)
        if self.standard_errors is not None and self.standard_errors.size != 2 + self.gamma2.size:
            raise ValueError("standard_errors must have one entry per coefficient")
        self.n_obs = int(n_obs)
        self.exposure_name = exposure_name
        self.gamma2.flags.writeable = False

    @property
    def coefficients(self) -> np.ndarray:
        return np.concatenate([[self.gamma0, self.gamma1], self.gamma2])

    @property
    def coefficient_names(self):
        return ["intercept", self.exposure_name or "W"] + self.covariate_names

    @property
    def se_gamma1(self) -> float:
        if self.standard_errors is None:
            raise ValueError("This calibration model has no stored standard errors")
        return float(self.standard_errors[1])

    def predict_arrays(self, w: np.ndarray, D: Optional[np.ndarray] = None) -> np.ndarray:
        w = np.asarray(w, dtype=float)
        xhat = self.gamma0 + self.gamma1 * w
        if self.gamma2.size:
            D = np.asarray(D, dtype=float).reshape(w.size, -1)
            if D.shape[1] != self.gamma2.size:
                raise ValueError(f"Expected {self.gamma2.size} covariate columns, got {D.shape[1]}")
            xhat = xhat + D @ self.gamma2
        return xhat

    def predict(self, dataset: TabularDataset) -> np.ndarray:
        """
        Predicts the corrected exposure for every row of ``dataset``.

        The error-prone exposure is taken from the column with role ``error_prone_exposure`` and the covariates
        are looked up by name.

        Raises:
            SchemaError: if the exposure or a covariate column is missing
        """
        w = dataset.role_values(ColumnRole.ERROR_PRONE_EXPOSURE)
        D = dataset.matrix(self.covariate_names)
        xhat = self.predict_arrays(w, D)
        if not np.all(np.isfinite(xhat)):
            raise InvalidDataError("Calibrated exposure has non-finite values")
        return xhat

    def perturbed(self, delta_sd: float, seed: Union[int, np.random.Generator, None] = None) -> "RcModel":
        """
        Returns a copy whose gamma1 is drawn from ``Normal(gamma1, (se(gamma1) + delta_sd)^2)``.

        Used to measure how sensitive the results are to the calibration relationship not carrying over
        from the validation study to the main study.
        """
        if delta_sd < 0:
            raise ValueError(f"delta_sd must be nonnegative, got {delta_sd}")
        rng = seed if isinstance(seed, np.random.Generator) else make_rng(seed)
        gamma1 = rng.normal(self.gamma1, self.se_gamma1 + delta_sd)
        config = self.get_config_dict()
        config["gamma1"] = float(gamma1)
        return RcModel(**config)

    def summary(self) -> Dict[str, Any]:
        summary = dict(zip(self.coefficient_names, self.coefficients.tolist()))
        summary.update({"residual_variance": self.residual_variance, "r_squared": self.r_squared, "n_obs": self.n_obs})
        return summary

    def get_config_dict(self) -> Dict[str, Any]:
        return {
            "gamma0": self.gamma0,
            "gamma1": self.gamma1,
            "gamma2": self.gamma2.tolist(),
            "covariate_names": list(self.covariate_names),
            "residual_variance": self.residual_variance,
            "r_squared": self.r_squared,
            "standard_errors": None if self.standard_errors is None else self.standard_errors.tolist(),
            "n_obs": self.n_obs,
            "exposure_name": self.exposure_name,
        }

    def save(self, path: str) -> None:
        directory = os.path.dirname(path)
        if directory:
            os.makedirs(directory, exist_ok=True)
        with open(path, "w", encoding="utf-8") as fOut:
            json.dump(self.get_config_dict(), fOut, indent=2, sort_keys=True)

    @staticmethod
    def load(path: str) -> "RcModel":
        with open(path, encoding="utf-8") as fIn:
            config = json.load(fIn)
        return RcModel(**config)

    def __eq__(self, other) -> bool:
        return isinstance(other, RcModel) and self.get_config_dict() == other.get_config_dict()

    def __repr__(self) -> str:
        return "RcModel({})".format(self.summary())
