"""
Generalized propensity scores: multinomial logistic regression of the exposure category on the confounders, and
trimming of units outside the region of common support.
"""

import logging
from dataclasses import dataclass
from enum import Enum
from typing import List, Optional, Sequence, Tuple

import numpy as np
import scipy.linalg
from scipy.special import log_softmax

from rc_gps.exceptions import AllTrimmedError, ConvergenceError, InvalidDataError, SeparationError
from rc_gps.models.GpsMatrix import GpsMatrix
from rc_gps.models.GpsModel import GpsModel
from rc_gps.tabular import TabularDataset

logger = logging.getLogger(__name__)

__all__ = [
    "GpsMatrix",
    "GpsModel",
    "TrimResult",
    "TrimmingStrategy",
    "check_categories",
    "fit_multinomial",
    "predict_gps",
    "trim_overlap",
]


def check_categories(xc: np.ndarray, n_categories: Optional[int] = None) -> Tuple[np.ndarray, int]:
    """Validates an exposure-category vector and returns it as integers together with the number of categories."""
    xc = np.asarray(xc)
    if xc.ndim != 1 or xc.size == 0:
        raise InvalidDataError("Exposure categories must be a non-empty vector")
    if np.any(xc != np.round(xc)):
        raise InvalidDataError("Exposure categories must be integers")
    xc = xc.astype(int)
    if n_categories is None:
        n_categories = int(xc.max())
    if n_categories < 2:
        raise InvalidDataError("At least two exposure categories are required")
    if xc.min() < 1 or xc.max() > n_categories:
        raise InvalidDataError(f"Exposure categories must lie in 1..{n_categories}")
    counts = np.bincount(xc, minlength=n_categories + 1)[1:]
    empty = np.flatnonzero(counts == 0)
    if empty.size:
        raise InvalidDataError(f"Exposure category {empty[0] + 1} has no units")
    return xc, n_categories


class _MultinomialLikelihood:
    """Penalized multinomial log-likelihood with the last category as reference; the ridge term skips intercepts."""

    def __init__(self, Z: np.ndarray, xc: np.ndarray, n_categories: int, ridge: float):
        self.Z = Z
        self.rows = np.arange(Z.shape[0])
        self.xc = xc
        self.Y = np.zeros((Z.shape[0], n_categories))
        self.Y[self.rows, xc - 1] = 1.0
        self.n_free = n_categories - 1
        self.ridge = ridge
        self.penalty_mask = np.ones((self.n_free, Z.shape[1]))
        self.penalty_mask[:, 0] = 0.0

    def log_probs(self, eta: np.ndarray) -> np.ndarray:
        logits = np.column_stack([self.Z @ eta.T, np.zeros(self.Z.shape[0])])
        return log_softmax(logits, axis=1)

    def value(self, eta: np.ndarray, log_probs: np.ndarray) -> float:
        loglik = float(np.sum(log_probs[self.rows, self.xc - 1]))
        return loglik - 0.5 * self.ridge * float(np.sum((eta * self.penalty_mask) ** 2))

    def gradient(self, eta: np.ndarray, probs: np.ndarray) -> np.ndarray:
        residuals = self.Y[:, : self.n_free] - probs[:, : self.n_free]
        return residuals.T @ self.Z - self.ridge * eta * self.penalty_mask

    def negative_hessian(self, probs: np.ndarray) -> np.ndarray:
        q = self.Z.shape[1]
        hessian = np.empty((self.n_free * q, self.n_free * q))
        for k in range(self.n_free):
            for m in range(k, self.n_free):
                w = probs[:, k] * ((k == m) - probs[:, m])
                block = self.Z.T @ (self.Z * w[:, None])
                hessian[k * q : (k + 1) * q, m * q : (m + 1) * q] = block
                hessian[m * q : (m + 1) * q, k * q : (k + 1) * q] = block.T
        hessian += self.ridge * np.diag(self.penalty_mask.ravel())
        return hessian


def fit_multinomial(
    xc: Sequence[int],
    C: np.ndarray,
    n_categories: Optional[int] = None,
    confounder_names: Optional[Sequence[str]] = None,
    ridge: Optional[float] = None,
    ridge_fallback: bool = False,
    max_iter: int = 100,
    tol: float = 1e-8,
) -> GpsModel:
    """
    Fits the multinomial logistic GPS model ``log p(x | c) / p(n | c) = eta_{0x} + eta_{1x}^T c`` by damped Newton
    iterations (step halving until the log-likelihood does not decrease).

    Iterations stop when the max-norm of the gradient drops below ``tol`` or after ``max_iter`` steps.

    Args:
        xc: exposure categories in ``1..n``; every category must be observed
        C: confounder matrix of shape (N, p); p may be zero
        n_categories: number of categories n. Defaults to ``max(xc)``.
        confounder_names: names stored on the model
        ridge: penalty on the slopes (intercepts are never penalized). Defaults to no penalty.
        ridge_fallback: on detected separation or non-convergence, refit with ``ridge = 1e-6 * N`` instead of
            raising. Defaults to False.
        max_iter: maximum number of Newton iterations. Defaults to 100.
        tol: gradient max-norm tolerance. Defaults to 1e-8.

    Returns:
        GpsModel: the fitted model

    Raises:
        InvalidDataError: if a category has no units or there are too few units for the number of coefficients
        SeparationError: if the categories are (quasi-)separated by the confounders and no fallback was requested
        ConvergenceError: if the iterations do not converge and no fallback was requested
    """
    xc, n_categories = check_categories(xc, n_categories)
    C = np.asarray(C, dtype=float)
    if C.ndim == 1:
        C = C.reshape(-1, 1)
    if C.shape[0] != xc.size:
        raise InvalidDataError(f"Confounder matrix has {C.shape[0]} rows, exposure vector has {xc.size}")
    if not np.all(np.isfinite(C)):
        raise InvalidDataError("Confounders must be finite")
    n_units, n_confounders = C.shape
    if n_units <= n_categories * (n_confounders + 1):
        raise InvalidDataError(
            f"{n_units} units are too few for a GPS model with {n_categories} categories "
            f"and {n_confounders} confounders"
        )

    try:
        return _newton(xc, C, n_categories, confounder_names, ridge or 0.0, max_iter, tol)
    except (SeparationError, ConvergenceError) as error:
        if not ridge_fallback or ridge:
            raise
        fallback = 1e-6 * n_units
        logger.warning(f"{error} Refitting the GPS model with ridge penalty {fallback:g} on the slopes.")
        return _newton(xc, C, n_categories, confounder_names, fallback, max_iter, tol)


def _newton(
    xc: np.ndarray,
    C: np.ndarray,
    n_categories: int,
    confounder_names: Optional[Sequence[str]],
    ridge: float,
    max_iter: int,
    tol: float,
) -> GpsModel:
    n_units = xc.size
    Z = np.column_stack([np.ones(n_units), C])
    likelihood = _MultinomialLikelihood(Z, xc, n_categories, ridge)

    counts = np.bincount(xc, minlength=n_categories + 1)[1:]
    eta = np.zeros((n_categories - 1, Z.shape[1]))
    eta[:, 0] = np.log(counts[:-1] / counts[-1])

    log_probs = likelihood.log_probs(eta)
    probs = np.exp(log_probs)
    loglik = likelihood.value(eta, log_probs)
    gradient = likelihood.gradient(eta, probs)
    grad_norm = float(np.max(np.abs(gradient)))
    converged = False
    iteration = 0
    separation_hint = "Consider the ridge option (ridge or ridge_fallback) of fit_multinomial."

    for iteration in range(1, max_iter + 1):
        if grad_norm < tol:
            converged = True
            iteration -= 1
            break
        try:
            step = scipy.linalg.solve(likelihood.negative_hessian(probs), gradient.ravel(), assume_a="pos")
        except (np.linalg.LinAlgError, ValueError):
            if ridge == 0 and probs.min() < 1e-12:
                raise SeparationError(f"GPS model is separated: the Hessian became singular. {separation_hint}")
            raise ConvergenceError(f"GPS Hessian is singular at iteration {iteration}") from None
        step = step.reshape(eta.shape)

        step_size = 1.0
        for _ in range(40):
            candidate = eta + step_size * step
            candidate_log_probs = likelihood.log_probs(candidate)
            candidate_loglik = likelihood.value(candidate, candidate_log_probs)
            if candidate_loglik >= loglik - 1e-12 * abs(loglik):
                break
            step_size /= 2
        else:
            # no ascent direction left at machine precision
            converged = grad_norm < tol * max(1.0, n_units)
            logger.debug(f"GPS line search stalled at iteration {iteration}, gradient max-norm {grad_norm:.3e}")
            break

        eta, log_probs, loglik = candidate, candidate_log_probs, candidate_loglik
        probs = np.exp(log_probs)
        gradient = likelihood.gradient(eta, probs)
        grad_norm = float(np.max(np.abs(gradient)))
        logger.debug(
            f"GPS Newton iteration {iteration}: log-likelihood {loglik:.10g}, step size {step_size:g}, "
            f"gradient max-norm {grad_norm:.3e}"
        )
    else:
        converged = grad_norm < tol

    if ridge == 0:
        own = probs[np.arange(n_units), xc - 1]
        if own.min() > 1 - 1e-8:
            raise SeparationError(
                f"GPS model is separated: every unit's category is predicted with certainty. {separation_hint}"
            )
        if probs.min() < 1e-12 and np.linalg.norm(eta[:, 1:]) > 1e3:
            raise SeparationError(
                f"GPS model is quasi-separated: fitted probabilities reach {probs.min():.1e} with diverging "
                f"coefficients. {separation_hint}"
            )
    if not converged:
        raise ConvergenceError(
            f"GPS model did not converge in {max_iter} iterations (gradient max-norm {grad_norm:.3e})"
        )

    logger.info(
        f"GPS model converged after {iteration} Newton iterations: log-likelihood {loglik:.6g}, "
        f"gradient max-norm {grad_norm:.2e}"
    )
    return GpsModel(
        eta,
        confounder_names=confounder_names,
        converged=converged,
        iterations=iteration,
        final_gradient_norm=grad_norm,
        ridge=ridge,
    )


def predict_gps(model: GpsModel, C: np.ndarray) -> GpsMatrix:
    """Softmax of the category logits (reference logit 0); raises SchemaError on a confounder-count mismatch."""
    return model.predict(C)


class TrimmingStrategy(Enum):
    """
    Strategies to restrict the sample to the region of common GPS support:

    - ``TrimmingStrategy.NONE`` (``"none"``): keep every unit
    - ``TrimmingStrategy.RANGE_INTERSECTION`` (``"range_intersection"``): keep units whose every GPS element lies in
      the intersection of the per-category ranges of that element
    - ``TrimmingStrategy.ITERATED_RANGE_INTERSECTION`` (``"iterated_range_intersection"``): repeat the range
      intersection on the kept units until a pass removes nothing, so that trimming the result again is a no-op
    - ``TrimmingStrategy.QUANTILE`` (``"quantile"``): keep units whose every GPS element lies between the
      ``alpha`` and ``1 - alpha`` quantiles of that element
    """

    NONE = "none"
    RANGE_INTERSECTION = "range_intersection"
    ITERATED_RANGE_INTERSECTION = "iterated_range_intersection"
    QUANTILE = "quantile"

    @staticmethod
    def possible_values() -> List[str]:
        return [strategy.value for strategy in TrimmingStrategy]


@dataclass
class TrimResult:
    """
    Outcome of :func:`trim_overlap`.

    Args:
        dataset: the kept rows of the dataset (None if no dataset was passed)
        gps: the kept rows of the GPS matrix
        xc: the kept exposure categories
        kept_index: 0-based indices of the kept units in the input order
        removed_index: 0-based indices of the removed units
        kept_fraction: share of units kept
        ranges: per element, the (lower, upper) bounds that were applied
    """

    dataset: Optional[TabularDataset]
    gps: GpsMatrix
    xc: np.ndarray
    kept_index: np.ndarray
    removed_index: np.ndarray
    kept_fraction: float
    ranges: List[Tuple[float, float]]


def overlap_ranges(gps: GpsMatrix, xc: np.ndarray) -> List[Tuple[float, float]]:
    """Per element x: ``(max_g min_{j in g} p(x|c_j), min_g max_{j in g} p(x|c_j))`` over the exposure groups g."""
    ranges = []
    groups = [xc == label for label in gps.category_labels if np.any(xc == label)]
    for column in range(gps.n_categories):
        values = gps.probs[:, column]
        lower = max(values[group].min() for group in groups)
        upper = min(values[group].max() for group in groups)
        ranges.append((float(lower), float(upper)))
    return ranges


def _check_ranges(gps: GpsMatrix, ranges: Sequence[Tuple[float, float]]) -> List[Tuple[float, float]]:
    ranges = [(float(lower), float(upper)) for lower, upper in ranges]
    if len(ranges) != gps.n_categories:
        raise InvalidDataError(f"Expected {gps.n_categories} trimming ranges, got {len(ranges)}")
    for element, (lower, upper) in enumerate(ranges):
        if lower > upper:
            raise AllTrimmedError(
                f"GPS element {gps.category_labels[element]} has no overlap across exposure groups "
                f"(range [{lower:.4g}, {upper:.4g}] is empty)"
            )
    return ranges


def _inside(probs: np.ndarray, ranges: Sequence[Tuple[float, float]]) -> np.ndarray:
    lower = np.array([bounds[0] for bounds in ranges])
    upper = np.array([bounds[1] for bounds in ranges])
    return np.all((probs >= lower) & (probs <= upper), axis=1)


def _iterate_range_intersection(gps: GpsMatrix, xc: np.ndarray) -> Tuple[np.ndarray, List[Tuple[float, float]], int]:
    """Range intersection recomputed on the kept units until a pass removes nothing."""
    categories = [label for label in gps.category_labels if np.any(xc == label)]
    kept = np.arange(xc.size)
    n_passes = 0
    while True:
        n_passes += 1
        ranges = _check_ranges(gps, overlap_ranges(gps.subset(kept), xc[kept]))
        inside = _inside(gps.probs[kept], ranges)
        if inside.all():
            return kept, ranges, n_passes
        kept = kept[inside]
        if kept.size == 0:
            raise AllTrimmedError(f"Iterated trimming removed every unit after {n_passes} passes")
        lost = [label for label in categories if not np.any(xc[kept] == label)]
        if lost:
            raise AllTrimmedError(
                f"Iterated trimming removed every unit of exposure category {lost[0]} after {n_passes} passes"
            )


def trim_overlap(
    dataset: Optional[TabularDataset],
    gps: GpsMatrix,
    xc: Sequence[int],
    strategy: TrimmingStrategy = TrimmingStrategy.RANGE_INTERSECTION,
    alpha: float = 0.01,
    ranges: Optional[Sequence[Tuple[float, float]]] = None,
) -> TrimResult:
    """
    Removes units outside the region where the GPS distributions of the exposure groups overlap.

    With ``RANGE_INTERSECTION`` a unit is kept iff for every element x, ``p(x|c_j)`` lies in
    ``[max_g min_{i in g} p(x|c_i), min_g max_{i in g} p(x|c_i)]``. The bounds are computed once on the input
    sample in a single pass, so trimming a result again with its own ``ranges`` removes nothing, while
    recomputing the bounds on the kept units may remove more. ``ITERATED_RANGE_INTERSECTION`` repeats the pass
    until the kept units reproduce their own bounds; trimming its result again with the same strategy is a no-op.

    Args:
        dataset: rows aligned with ``gps`` (may be None)
        gps: the GPS matrix
        xc: exposure categories aligned with ``gps``
        strategy: the trimming rule. Defaults to ``RANGE_INTERSECTION``.
        alpha: quantile level of the ``QUANTILE`` strategy. Defaults to 0.01.
        ranges: per-element ``(lower, upper)`` bounds to apply instead of computing them, e.g. the ``ranges`` of
            an earlier :class:`TrimResult`. Ignored by ``NONE``.

    Returns:
        TrimResult: the kept rows and the kept fraction

    Raises:
        AllTrimmedError: if some element has an empty overlap interval, or no unit (or no unit of some category)
            survives
    """
    strategy = TrimmingStrategy(strategy)
    xc = np.asarray(xc, dtype=int)
    if xc.size != gps.n_rows:
        raise InvalidDataError(f"Exposure vector has {xc.size} entries, GPS matrix has {gps.n_rows} rows")
    if dataset is not None and dataset.n_rows != gps.n_rows:
        raise InvalidDataError(f"Dataset has {dataset.n_rows} rows, GPS matrix has {gps.n_rows} rows")
    n_units = xc.size
    kept = np.arange(n_units)

    if strategy == TrimmingStrategy.NONE:
        ranges = [(0.0, 1.0)] * gps.n_categories
    else:
        if ranges is None and strategy == TrimmingStrategy.QUANTILE:
            if not 0 <= alpha < 0.5:
                raise ValueError(f"alpha must lie in [0, 0.5), got {alpha}")
            lower = np.quantile(gps.probs, alpha, axis=0)
            upper = np.quantile(gps.probs, 1 - alpha, axis=0)
            ranges = list(zip(lower.tolist(), upper.tolist()))
        elif ranges is None and strategy == TrimmingStrategy.ITERATED_RANGE_INTERSECTION:
            kept, ranges, n_passes = _iterate_range_intersection(gps, xc)
            logger.debug(f"Iterated range intersection reached its fixed point after {n_passes} passes")
        elif ranges is None:
            ranges = overlap_ranges(gps, xc)
        ranges = _check_ranges(gps, ranges)
        kept = kept[_inside(gps.probs[kept], ranges)]

    if kept.size == 0:
        raise AllTrimmedError("Trimming removed every unit")
    missing = [label for label in gps.category_labels if np.any(xc == label) and not np.any(xc[kept] == label)]
    if missing:
        raise AllTrimmedError(f"Trimming removed every unit of exposure category {missing[0]}")

    removed = np.setdiff1d(np.arange(n_units), kept)
    kept_fraction = kept.size / n_units
    if strategy != TrimmingStrategy.NONE:
        logger.info(
            f"Trimming ({strategy.value}) kept {kept.size} of {n_units} units ({kept_fraction:.2%}), "
            f"removed {removed.size}"
        )
    return TrimResult(
        dataset=None if dataset is None else dataset.subset(kept),
        gps=gps.subset(kept),
        xc=xc[kept],
        kept_index=kept,
        removed_index=removed,
        kept_fraction=kept_fraction,
        ranges=ranges,
    )
