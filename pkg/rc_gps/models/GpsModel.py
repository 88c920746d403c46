import json
import logging
import os
from typing import Any, Dict, Iterable, Optional, Sequence

import numpy as np
from scipy.special import log_softmax, softmax

from rc_gps.exceptions import SchemaError
from rc_gps.models.GpsMatrix import GpsMatrix

logger = logging.getLogger(__name__)


class GpsModel:
    """
    A fitted multinomial logistic model ``log p(x | c) / p(n | c) = eta_{0x} + eta_{1x}^T c`` with the highest
    category ``n`` as reference.

    Args:
        eta: coefficient matrix of shape (n - 1, 1 + #confounders); column 0 holds the intercepts
        confounder_names: names of the confounder columns, in the order of ``eta``'s slope columns
        converged: whether the Newton iterations converged
        iterations: number of Newton iterations used
        final_gradient_norm: max-norm of the log-likelihood gradient at the solution
        ridge: penalty on the slopes used in the fit (0 for plain maximum likelihood)
    """

    def __init__(
        self,
        eta: np.ndarray,
        confounder_names: Optional[Sequence[str]] = None,
        converged: bool = True,
        iterations: int = 0,
        final_gradient_norm: float = 0.0,
        ridge: float = 0.0,
    ):
        eta = np.array(eta, dtype=float, copy=True)
        if eta.ndim != 2 or eta.shape[0] < 1 or eta.shape[1] < 1:
            raise ValueError(f"eta must have shape (n - 1, 1 + p), got {eta.shape}")
        eta.flags.writeable = False
        self.eta = eta
        if confounder_names is None:
            confounder_names = [f"c{idx}" for idx in range(1, eta.shape[1])]
        self.confounder_names = list(confounder_names)
        if len(self.confounder_names) != eta.shape[1] - 1:
            raise ValueError("confounder_names must have one entry per slope column of eta")
        self.converged = bool(converged)
        self.iterations = int(iterations)
        self.final_gradient_norm = float(final_gradient_norm)
        self.ridge = float(ridge)

    @property
    def n_categories(self) -> int:
        return self.eta.shape[0] + 1

    @property
    def reference_category(self) -> int:
        return self.n_categories

    @property
    def n_confounders(self) -> int:
        return self.eta.shape[1] - 1

    def _design(self, C: np.ndarray) -> np.ndarray:
        C = np.asarray(C, dtype=float)
        if C.ndim == 1:
            C = C.reshape(-1, 1)
        if C.shape[1] != self.n_confounders:
            raise SchemaError(f"Expected {self.n_confounders} confounder columns, got {C.shape[1]}")
        return np.column_stack([np.ones(C.shape[0]), C])

    def linear_predictors(self, C: np.ndarray) -> np.ndarray:
        """Logits of shape (N, n); the reference column is zero."""
        Z = self._design(C)
        return np.column_stack([Z @ self.eta.T, np.zeros(Z.shape[0])])

    def predict(self, C: np.ndarray) -> GpsMatrix:
        return GpsMatrix(softmax(self.linear_predictors(C), axis=1))

    def log_likelihood(self, C: np.ndarray, xc: Iterable[int]) -> float:
        xc = np.asarray(xc, dtype=int)
        log_probs = log_softmax(self.linear_predictors(C), axis=1)
        return float(np.sum(log_probs[np.arange(xc.size), xc - 1]))

    def get_config_dict(self) -> Dict[str, Any]:
        return {
            "eta": self.eta.tolist(),
            "confounder_names": self.confounder_names,
            "converged": self.converged,
            "iterations": self.iterations,
            "final_gradient_norm": self.final_gradient_norm,
            "ridge": self.ridge,
        }

    def save(self, path: str) -> None:
        directory = os.path.dirname(path)
        if directory:
            os.makedirs(directory, exist_ok=True)
        with open(path, "w", encoding="utf-8") as fOut:
            json.dump(self.get_config_dict(), fOut, indent=2, sort_keys=True)

    @staticmethod
    def load(path: str) -> "GpsModel":
        with open(path, encoding="utf-8") as fIn:
            config = json.load(fIn)
        return GpsModel(**config)

    def __repr__(self) -> str:
        return (
            f"GpsModel(n_categories={self.n_categories}, confounders={self.confounder_names}, "
            f"converged={self.converged}, iterations={self.iterations})"
        )
