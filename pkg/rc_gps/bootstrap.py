"""
Bootstrap inference for the whole RC-GPS procedure: every replicate resamples the studies and reruns calibration,
GPS estimation, trimming, the GPS implementation and the contrasts.
"""

import logging
import math
from enum import Enum
from functools import partial
from typing import Any, Dict, List, Optional, Union

import numpy as np
from scipy.stats import norm

from rc_gps.exceptions import RcGpsError, ReplicateFailureError
from rc_gps.estimators import EstimationMethod
from rc_gps.models.RcModel import RcModel
from rc_gps.outcome import AteRow, AteTable, ContrastScale
from rc_gps.pipeline import PipelineResult, RCGPSPipeline
from rc_gps.tabular import TabularDataset
from rc_gps.util import make_rng, quiet_logging, resolve_show_progress_bar, run_indexed

logger = logging.getLogger(__name__)

BOOTSTRAP_STREAM = 1


class BootstrapMode(Enum):
    """
    Resampling schemes of the main study:

    - ``BootstrapMode.STANDARD`` (``"standard"``): N rows with replacement
    - ``BootstrapMode.M_OUT_OF_N`` (``"m_out_of_n"``): m < N rows without replacement, the variance rescaled by m/N;
      required for matching
    """

    STANDARD = "standard"
    M_OUT_OF_N = "m_out_of_n"

    @staticmethod
    def possible_values() -> List[str]:
        return [mode.value for mode in BootstrapMode]


def default_subsample_size(n_rows: int) -> int:
    """``ceil(N^(2/3))``."""
    return int(math.ceil(n_rows ** (2.0 / 3.0) - 1e-9))


def _replicate(
    index: int,
    pipeline: RCGPSPipeline,
    main: TabularDataset,
    validation: Optional[TabularDataset],
    seed: int,
    mode: BootstrapMode,
    subsample_size: int,
    frozen_rc: Optional[RcModel],
) -> Union[np.ndarray, Dict[str, Any]]:
    rng = make_rng(seed, BOOTSTRAP_STREAM, index)
    if mode == BootstrapMode.STANDARD:
        main_rows = rng.integers(0, main.n_rows, size=main.n_rows)
    else:
        main_rows = np.sort(rng.choice(main.n_rows, size=subsample_size, replace=False))
    replicate_validation = validation
    if validation is not None and frozen_rc is None:
        replicate_validation = validation.subset(rng.integers(0, validation.n_rows, size=validation.n_rows))

    try:
        with quiet_logging():
            result = pipeline.run(main.subset(main_rows), replicate_validation, rc_model=frozen_rc)
    except RcGpsError as error:
        return {"replicate": index + 1, "error": type(error).__name__, "message": str(error)}
    return {(row.scale.value, row.x_prime, row.x): row.estimate for row in result.table}


def bootstrap_ate(
    pipeline: RCGPSPipeline,
    main: TabularDataset,
    validation: Optional[TabularDataset] = None,
    n_replicates: int = 100,
    mode: Union[str, BootstrapMode] = BootstrapMode.STANDARD,
    seed: int = 0,
    subsample_size: Optional[int] = None,
    freeze_calibration: bool = False,
    max_failure_rate: float = 0.1,
    confidence_level: float = 0.95,
    point: Optional[PipelineResult] = None,
    n_workers: Optional[int] = None,
    show_progress_bar: Optional[bool] = None,
) -> AteTable:
    """
    Bootstrap standard errors and normal-approximation confidence intervals for the ATE contrasts.

    Each replicate resamples the validation study (with replacement, same size; skipped with
    ``freeze_calibration``) and the main study (per ``mode``), then reruns the pipeline. The standard error is the
    standard deviation of the replicate estimates, multiplied by ``sqrt(m / N)`` in ``m_out_of_n`` mode.
    Differences get ``estimate +- z * se``; ratios get the interval on the log scale, ``exp(log(estimate) +- z *
    se_log)``, so that it stays positive.

    Replicate streams are derived from ``(seed, replicate index)``, so results do not depend on ``n_workers``.

    Args:
        pipeline: the configured procedure
        main: the main study
        validation: the validation study (needed when the pipeline calibrates)
        n_replicates: number of replicates B, at least 2. Defaults to 100.
        mode: resampling scheme. Defaults to ``standard``.
        seed: base seed. Defaults to 0.
        subsample_size: m for ``m_out_of_n``. Defaults to ``ceil(N^(2/3))``.
        freeze_calibration: keep the calibration model of the full data in every replicate. Defaults to False.
        max_failure_rate: share of replicates allowed to fail; failed replicates are logged and skipped.
            Defaults to 0.1.
        confidence_level: coverage of the intervals. Defaults to 0.95.
        point: the full-data result, if already computed
        n_workers: worker processes. Defaults to the ``RC_GPS_NUM_WORKERS`` environment variable, else 1.
        show_progress_bar: show a progress bar. Defaults to showing it when the logger level is INFO or DEBUG.

    Returns:
        AteTable: the point estimates with ``se``, ``ci_lower`` and ``ci_upper``; ``replicates`` holds the
        replicate estimates and ``failures`` the skipped replicates

    Raises:
        ValueError: if ``n_replicates < 2`` or matching is combined with the standard bootstrap
        ReplicateFailureError: if more than ``max_failure_rate`` of the replicates fail
    """
    mode = BootstrapMode(mode)
    if n_replicates < 2:
        raise ValueError(f"The bootstrap needs at least 2 replicates, got {n_replicates}")
    if pipeline.method == EstimationMethod.MATCHING and mode != BootstrapMode.M_OUT_OF_N:
        raise ValueError("The standard bootstrap is not valid for matching estimators; use mode='m_out_of_n'")
    if subsample_size is None:
        subsample_size = default_subsample_size(main.n_rows)
    if mode == BootstrapMode.M_OUT_OF_N and not 1 < subsample_size <= main.n_rows:
        raise ValueError(f"subsample_size must lie in 2..{main.n_rows}, got {subsample_size}")

    if point is None:
        point = pipeline.run(main, validation)
    frozen_rc = point.rc_model if freeze_calibration else None
    keys = [(row.scale.value, row.x_prime, row.x) for row in point.table]

    show_progress_bar = resolve_show_progress_bar(show_progress_bar, logger)
    worker = partial(
        _replicate,
        pipeline=pipeline,
        main=main,
        validation=validation,
        seed=seed,
        mode=mode,
        subsample_size=subsample_size,
        frozen_rc=frozen_rc,
    )
    outputs = run_indexed(worker, range(n_replicates), n_workers, "Bootstrap", show_progress_bar)

    failures, estimates = [], []
    for output in outputs:
        if "error" in output:
            failures.append(output)
            logger.warning(f"Bootstrap replicate {output['replicate']} skipped: {output['message']}")
        else:
            estimates.append([output[key] for key in keys])
    if len(failures) > max_failure_rate * n_replicates:
        raise ReplicateFailureError(
            f"{len(failures)} of {n_replicates} bootstrap replicates failed (allowed: {max_failure_rate:.0%}); "
            f"first failure: {failures[0]['message']}",
            failures,
        )
    replicates = np.array(estimates, dtype=float)

    scale_factor = math.sqrt(subsample_size / main.n_rows) if mode == BootstrapMode.M_OUT_OF_N else 1.0
    z = float(norm.ppf(0.5 + confidence_level / 2))
    rows = []
    for column, row in enumerate(point.table):
        values = replicates[:, column]
        se = float(np.std(values, ddof=1)) * scale_factor
        if row.scale == ContrastScale.RATIO:
            se_log = float(np.std(np.log(values), ddof=1)) * scale_factor
            lower, upper = row.estimate * math.exp(-z * se_log), row.estimate * math.exp(z * se_log)
        else:
            lower, upper = row.estimate - z * se, row.estimate + z * se
        rows.append(AteRow(row.x_prime, row.x, row.scale, row.estimate, row.method, se, lower, upper))

    logger.info(
        f"Bootstrap ({mode.value}, B={n_replicates}) finished with {len(failures)} failed replicate(s)"
    )
    return AteTable(rows, replicates=replicates, failures=failures)
