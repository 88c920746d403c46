import csv
import hashlib
import json
import logging
import os
from concurrent.futures import ProcessPoolExecutor
from contextlib import contextmanager
from dataclasses import dataclass, fields
from enum import Enum
from typing import Any, Callable, Iterable, List, Mapping, Optional, Sequence, Type, TypeVar

import numpy as np
import scipy.linalg
from tqdm.autonotebook import tqdm

from rc_gps.exceptions import ConfigError, SingularDesignError

logger = logging.getLogger(__name__)

NUM_WORKERS_ENV = "RC_GPS_NUM_WORKERS"


@dataclass
class LeastSquaresFit:
    """
    Result of a (weighted) least-squares solve.

    Args:
        coef: coefficient vector in the column order of the design
        residuals: unweighted residuals ``y - X @ coef``
        rss: (weighted) residual sum of squares
        unscaled_cov: ``(X^T W X)^{-1}``, multiply by the residual variance to get the covariance
        df_resid: residual degrees of freedom ``n - p``
    """

    coef: np.ndarray
    residuals: np.ndarray
    rss: float
    unscaled_cov: np.ndarray
    df_resid: int


def least_squares(
    X: np.ndarray,
    y: np.ndarray,
    weights: Optional[np.ndarray] = None,
    column_names: Optional[Sequence[str]] = None,
    rtol: float = 1e-10,
) -> LeastSquaresFit:
    """
    Solves ``min_b sum_i w_i (y_i - x_i^T b)^2`` with a column-pivoted QR decomposition.

    A column whose diagonal entry in ``R`` is below ``rtol`` times the largest one is treated as
    linearly dependent on the preceding columns.

    Args:
        X (np.ndarray): Design matrix of shape (n, p).
        y (np.ndarray): Response vector of shape (n,).
        weights (np.ndarray, optional): Nonnegative observation weights. Defaults to unit weights.
        column_names (Sequence[str], optional): Names used when reporting collinear columns.
        rtol (float): Relative rank tolerance. Defaults to 1e-10.

    Returns:
        LeastSquaresFit: The solution.

    Raises:
        SingularDesignError: If the design is rank deficient.
    """
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    n, p = X.shape
    if column_names is None:
        column_names = [f"x{idx}" for idx in range(p)]

    if weights is None:
        sqrt_w = np.ones(n)
    else:
        weights = np.asarray(weights, dtype=float)
        if np.any(weights < 0):
            raise ValueError("Least-squares weights must be nonnegative")
        sqrt_w = np.sqrt(weights)

    Xw = X * sqrt_w[:, None]
    yw = y * sqrt_w
    if p == 0:
        return LeastSquaresFit(np.zeros(0), y.copy(), float(yw @ yw), np.zeros((0, 0)), n)

    Q, R, pivot = scipy.linalg.qr(Xw, mode="economic", pivoting=True)
    diag = np.abs(np.diag(R))
    rank = int(np.sum(diag > rtol * diag[0])) if diag.size and diag[0] > 0 else 0
    if rank < p:
        raise SingularDesignError([column_names[idx] for idx in sorted(pivot[rank:])])

    coef_pivoted = scipy.linalg.solve_triangular(R, Q.T @ yw)
    coef = np.empty(p)
    coef[pivot] = coef_pivoted

    R_inv = scipy.linalg.solve_triangular(R, np.eye(p))
    cov_pivoted = R_inv @ R_inv.T
    unscaled_cov = np.empty((p, p))
    unscaled_cov[np.ix_(pivot, pivot)] = cov_pivoted

    residuals = y - X @ coef
    rss = float(np.sum((residuals * sqrt_w) ** 2))
    return LeastSquaresFit(coef=coef, residuals=residuals, rss=rss, unscaled_cov=unscaled_cov, df_resid=n - p)


def make_rng(seed: Optional[int], *stream: int) -> np.random.Generator:
    """
    Creates a random generator for the stream ``(seed, *stream)``.

    Streams are derived from counters rather than from a shared generator, so replicate ``i`` draws
    the same numbers no matter which worker runs it or in which order.
    """
    if seed is None:
        return np.random.default_rng()
    return np.random.default_rng([int(seed), *[int(s) for s in stream]])


def config_hash(config: Any) -> str:
    """SHA-256 of the canonical JSON encoding of ``config``."""
    payload = json.dumps(config, sort_keys=True, separators=(",", ":"), default=str)
    return hashlib.sha256(payload.encode("utf-8")).hexdigest()


def get_num_workers(n_workers: Optional[int] = None) -> int:
    """Resolves the worker count from the argument or the ``RC_GPS_NUM_WORKERS`` environment variable."""
    if n_workers is None:
        n_workers = int(os.environ.get(NUM_WORKERS_ENV, "1"))
    return max(1, int(n_workers))


def resolve_show_progress_bar(show_progress_bar: Optional[bool], module_logger: logging.Logger) -> bool:
    if show_progress_bar is None:
        return module_logger.getEffectiveLevel() in (logging.INFO, logging.DEBUG)
    return show_progress_bar


def run_indexed(
    fn: Callable[[int], Any],
    indices: Iterable[int],
    n_workers: Optional[int] = None,
    desc: Optional[str] = None,
    show_progress_bar: bool = False,
) -> List[Any]:
    """
    Evaluates ``fn(i)`` for every index and returns the results ordered by index.

    With more than one worker the calls run in a process pool, so ``fn`` must be picklable
    (a module-level function or a ``functools.partial`` of one).
    """
    indices = list(indices)
    n_workers = get_num_workers(n_workers)
    if n_workers == 1 or len(indices) <= 1:
        return [fn(idx) for idx in tqdm(indices, desc=desc, disable=not show_progress_bar)]

    logger.debug(f"Running {len(indices)} tasks on {n_workers} worker processes")
    with ProcessPoolExecutor(max_workers=n_workers) as executor:
        results = list(
            tqdm(executor.map(fn, indices), total=len(indices), desc=desc, disable=not show_progress_bar)
        )
    return results


def format_value(value: Any) -> str:
    """Formats a cell for CSV output; floats use the shortest repr that round-trips."""
    if isinstance(value, (bool, np.bool_)):
        return str(bool(value))
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        value = float(value)
        if value.is_integer() and abs(value) < 1e15:
            return str(int(value))
        return repr(value)
    if value is None:
        return ""
    if isinstance(value, Enum):
        return str(value.value)
    return str(value)


def write_csv_rows(path: str, header: Sequence[str], rows: Iterable[Sequence[Any]]) -> None:
    with open(path, newline="", mode="w", encoding="utf-8") as fOut:
        writer = csv.writer(fOut, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([format_value(value) for value in row])


def write_json(path: str, payload: Any) -> None:
    with open(path, mode="w", encoding="utf-8") as fOut:
        json.dump(payload, fOut, indent=2, sort_keys=True, default=_json_default)
        fOut.write("\n")


def _json_default(value: Any) -> Any:
    if isinstance(value, np.ndarray):
        return value.tolist()
    if isinstance(value, np.integer):
        return int(value)
    if isinstance(value, np.floating):
        return float(value)
    if hasattr(value, "value"):
        return value.value
    raise TypeError(f"Object of type {type(value).__name__} is not JSON serializable")


@contextmanager
def quiet_logging(level: int = logging.WARNING, name: str = "rc_gps"):
    """Temporarily raises the level of the package logger, e.g. inside replicate loops."""
    package_logger = logging.getLogger(name)
    previous = package_logger.level
    if package_logger.getEffectiveLevel() < level:
        package_logger.setLevel(level)
    try:
        yield
    finally:
        package_logger.setLevel(previous)


T = TypeVar("T")


def join_path(*parts: str) -> str:
    return ".".join(part for part in parts if part)


def dataclass_from_dict(cls: Type[T], values: Any, field_path: str = "") -> T:
    """
    Builds the dataclass ``cls`` from a JSON object. Unknown keys and values rejected by the constructor raise
    :class:`ConfigError` carrying the dotted path of the field.
    """
    if not isinstance(values, Mapping):
        raise ConfigError(field_path, f"expected an object, got {type(values).__name__}")
    known = {item.name for item in fields(cls)}
    unknown = sorted(set(values) - known)
    if unknown:
        raise ConfigError(join_path(field_path, unknown[0]), "unknown field")
    try:
        return cls(**values)
    except ConfigError as error:
        raise ConfigError(join_path(field_path, error.field_path), error.message) from error
    except (TypeError, ValueError) as error:
        raise ConfigError(field_path, str(error)) from error


def parse_enum(enum_cls: Type[T], value: Any, field_name: str) -> T:
    """``enum_cls(value)``, raising :class:`ConfigError` for ``field_name`` on an unknown value."""
    try:
        return enum_cls(value)
    except ValueError:
        raise ConfigError(field_name, f"{value!r} is not one of {enum_cls.possible_values()}") from None
