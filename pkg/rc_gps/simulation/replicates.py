"""
Monte Carlo replicate studies: every replicate draws a fresh main and validation study from a scenario, runs the
RC-GPS procedure for each requested exposure arm and GPS implementation, and the estimates are summarized against
the large-sample oracle.
"""

import logging
from functools import partial
from typing import Any, Dict, Iterable, List, Optional, Sequence, Union

import numpy as np

from rc_gps.bootstrap import BootstrapMode, bootstrap_ate
from rc_gps.calibration import fit_rc
from rc_gps.estimators import EstimationMethod
from rc_gps.exceptions import RcGpsError, ReplicateFailureError
from rc_gps.gps import TrimmingStrategy
from rc_gps.outcome import ContrastScale
from rc_gps.pipeline import ExposureSource, RCGPSPipeline
from rc_gps.simulation.ReplicateSummary import ReplicateSummary, SummaryRow
from rc_gps.simulation.scenario import OracleAte, generate_scenario, oracle_ate
from rc_gps.simulation.ScenarioConfig import ScenarioConfig
from rc_gps.util import make_rng, quiet_logging, resolve_show_progress_bar, run_indexed

logger = logging.getLogger(__name__)

# the four exposure arms compared in a replicate study
RcSpec = ExposureSource

SIMULATION_STREAM = 2
PERTURBATION_STREAM = 3
BOOTSTRAP_SEED_STREAM = 4

ALL_ARMS = (
    ExposureSource.ERROR_FREE,
    ExposureSource.ERROR_PRONE,
    ExposureSource.RC_NO_COVARIATES,
    ExposureSource.RC_WITH_COVARIATES,
)


def _failure(index: int, arm: ExposureSource, method: EstimationMethod, error: Exception) -> Dict[str, Any]:
    return {
        "replicate": index + 1,
        "arm": arm.value,
        "method": method.value,
        "error": type(error).__name__,
        "message": str(error),
    }


def _run_replicate(
    index: int,
    cfg: ScenarioConfig,
    arms: Sequence[ExposureSource],
    methods: Sequence[EstimationMethod],
    seed: int,
    estimator_kwargs: Dict[str, dict],
    trimming: TrimmingStrategy,
    ridge_fallback: bool,
    bootstrap_replicates: int,
    perturbation_sd: Optional[float],
) -> Dict[str, List[Dict[str, Any]]]:
    main, validation = generate_scenario(cfg, make_rng(seed, SIMULATION_STREAM, index))
    results, failures = [], []
    with quiet_logging():
        for arm_idx, arm in enumerate(arms):
            rc_model = None
            if arm.uses_calibration:
                try:
                    rc_model = fit_rc(validation, covariates=() if arm == ExposureSource.RC_NO_COVARIATES else None)
                    if perturbation_sd is not None:
                        rc_model = rc_model.perturbed(perturbation_sd, make_rng(seed, PERTURBATION_STREAM, index))
                except RcGpsError as error:
                    failures.extend(_failure(index, arm, method, error) for method in methods)
                    continue

            for method_idx, method in enumerate(methods):
                pipeline = RCGPSPipeline(
                    cfg.cutoffs,
                    method=method,
                    estimator_kwargs=estimator_kwargs.get(method.value),
                    exposure_source=arm,
                    trimming=trimming,
                    ridge_fallback=ridge_fallback,
                    scales=[ContrastScale.DIFFERENCE],
                )
                try:
                    point = pipeline.run(main, validation, rc_model=rc_model)
                    table = point.table
                    if bootstrap_replicates:
                        bootstrap_seed = make_rng(seed, BOOTSTRAP_SEED_STREAM, index, arm_idx, method_idx)
                        table = bootstrap_ate(
                            pipeline,
                            main,
                            validation,
                            n_replicates=bootstrap_replicates,
                            mode=BootstrapMode.M_OUT_OF_N
                            if method == EstimationMethod.MATCHING
                            else BootstrapMode.STANDARD,
                            seed=int(bootstrap_seed.integers(2**31)),
                            freeze_calibration=perturbation_sd is not None,
                            point=point,
                            n_workers=1,
                            show_progress_bar=False,
                        )
                except RcGpsError as error:
                    failures.append(_failure(index, arm, method, error))
                    continue

                for x in range(1, cfg.n_categories):
                    row = table.get(x + 1, x)
                    results.append(
                        {
                            "replicate": index + 1,
                            "arm": arm.value,
                            "method": method.value,
                            "delta": perturbation_sd,
                            "x_prime": x + 1,
                            "x": x,
                            "estimate": row.estimate,
                            "ci_lower": row.ci_lower,
                            "ci_upper": row.ci_upper,
                        }
                    )
    return {"results": results, "failures": failures}


def _summarize(
    raw: List[Dict[str, Any]],
    failures: List[Dict[str, Any]],
    oracle: OracleAte,
    arms: Sequence[ExposureSource],
    methods: Sequence[EstimationMethod],
    n_categories: int,
    n_replicates: int,
    max_failure_rate: float,
    delta: Optional[float],
) -> List[SummaryRow]:
    rows = []
    for arm in arms:
        for method in methods:
            n_failed = sum(1 for entry in failures if entry["arm"] == arm.value and entry["method"] == method.value)
            if n_failed > max_failure_rate * n_replicates:
                cell_failures = [f for f in failures if f["arm"] == arm.value and f["method"] == method.value]
                raise ReplicateFailureError(
                    f"{n_failed} of {n_replicates} replicates failed for arm {arm.value} with {method.value} "
                    f"(allowed: {max_failure_rate:.0%}); first failure: {cell_failures[0]['message']}",
                    cell_failures,
                )
            for x in range(1, n_categories):
                entries = [
                    entry
                    for entry in raw
                    if entry["arm"] == arm.value and entry["method"] == method.value and entry["x"] == x
                ]
                values = np.array([entry["estimate"] for entry in entries], dtype=float)
                truth = oracle.ate(x + 1, x)
                mean = float(values.mean()) if values.size else float("nan")
                sd = float(values.std(ddof=1)) if values.size > 1 else 0.0
                covered = [
                    entry["ci_lower"] <= truth <= entry["ci_upper"]
                    for entry in entries
                    if entry["ci_lower"] is not None
                ]
                rows.append(
                    SummaryRow(
                        arm=arm.value,
                        method=method.value,
                        x_prime=x + 1,
                        x=x,
                        oracle=truth,
                        mean=mean,
                        bias=mean - truth,
                        percent_bias=100.0 * (mean - truth) / truth if truth != 0 else None,
                        sd=sd,
                        mc_se=sd / np.sqrt(values.size) if values.size else float("nan"),
                        coverage=float(np.mean(covered)) if covered else None,
                        n_success=int(values.size),
                        n_failed=n_failed,
                        delta=delta,
                    )
                )
    return rows


def run_replicates(
    cfg: ScenarioConfig,
    methods: Iterable[Union[str, EstimationMethod]] = (EstimationMethod.SUBCLASSIFICATION,),
    arms: Iterable[Union[str, ExposureSource]] = ALL_ARMS,
    n_replicates: Optional[int] = None,
    seed: Optional[int] = None,
    oracle: Optional[OracleAte] = None,
    oracle_rows: int = 10**6,
    estimator_kwargs: Optional[Dict[str, dict]] = None,
    trimming: Union[str, TrimmingStrategy] = TrimmingStrategy.RANGE_INTERSECTION,
    ridge_fallback: bool = False,
    bootstrap_replicates: int = 0,
    perturbation_sd: Optional[float] = None,
    max_failure_rate: float = 0.1,
    n_workers: Optional[int] = None,
    show_progress_bar: Optional[bool] = None,
) -> ReplicateSummary:
    """
    Runs a replicate study and summarizes bias, percent bias, empirical SD and (with bootstrap) CI coverage of the
    consecutive contrasts ``ATE(x + 1, x)`` against the oracle.

    Replicate i draws its data from the stream ``(seed, i)``, so summaries do not depend on ``n_workers``.

    Args:
        cfg: the scenario
        methods: GPS implementations. Defaults to subclassification.
        arms: exposure arms (error-free, error-prone, calibrated without / with covariates). Defaults to all four.
        n_replicates: number of replicates R. Defaults to ``cfg.n_replicates``.
        seed: base seed. Defaults to ``cfg.seed``.
        oracle: precomputed oracle. Defaults to :func:`oracle_ate` on ``oracle_rows`` rows.
        oracle_rows: size of the oracle sample. Defaults to 10^6.
        estimator_kwargs: per method value, keyword arguments of the estimator
        trimming: trimming strategy. Defaults to the range-intersection rule.
        ridge_fallback: refit the GPS model with a small ridge penalty on separation. Defaults to False.
        bootstrap_replicates: bootstrap replicates per Monte Carlo replicate; 0 skips the bootstrap and the coverage.
            Matching uses the m-out-of-n bootstrap. Defaults to 0.
        perturbation_sd: if set, gamma1 of every fitted calibration model is redrawn from
            ``Normal(gamma1, (se + perturbation_sd)^2)``
        max_failure_rate: share of replicates allowed to fail per arm and method. Defaults to 0.1.
        n_workers: worker processes. Defaults to the ``RC_GPS_NUM_WORKERS`` environment variable, else 1.
        show_progress_bar: show a progress bar. Defaults to showing it when the logger level is INFO or DEBUG.

    Returns:
        ReplicateSummary: the summary rows, the raw estimates and the failure log

    Raises:
        ReplicateFailureError: if more than ``max_failure_rate`` of the replicates fail for some arm and method
    """
    methods = [EstimationMethod(method) for method in methods]
    arms = [ExposureSource(arm) for arm in arms]
    n_replicates = cfg.n_replicates if n_replicates is None else int(n_replicates)
    if n_replicates < 1:
        raise ValueError(f"n_replicates must be at least 1, got {n_replicates}")
    seed = cfg.seed if seed is None else int(seed)
    if oracle is None:
        oracle = oracle_ate(cfg, n_rows=oracle_rows)

    worker = partial(
        _run_replicate,
        cfg=cfg,
        arms=arms,
        methods=methods,
        seed=seed,
        estimator_kwargs=dict(estimator_kwargs or {}),
        trimming=TrimmingStrategy(trimming),
        ridge_fallback=ridge_fallback,
        bootstrap_replicates=bootstrap_replicates,
        perturbation_sd=perturbation_sd,
    )
    show_progress_bar = resolve_show_progress_bar(show_progress_bar, logger)
    outputs = run_indexed(worker, range(n_replicates), n_workers, "Replicates", show_progress_bar)

    raw = [entry for output in outputs for entry in output["results"]]
    failures = [entry for output in outputs for entry in output["failures"]]
    for entry in failures:
        logger.warning(
            f"Replicate {entry['replicate']} ({entry['arm']}, {entry['method']}) failed: {entry['message']}"
        )
    rows = _summarize(
        raw, failures, oracle, arms, methods, cfg.n_categories, n_replicates, max_failure_rate, perturbation_sd
    )
    for row in rows:
        logger.info(
            f"{row.arm} / {row.method} ATE({row.x_prime},{row.x}): mean {row.mean:.4f}, "
            f"bias {row.bias:.4f}, sd {row.sd:.4f}"
        )
    return ReplicateSummary(rows, raw=raw, failures=failures, oracle=oracle.to_dict())


def run_sensitivity(
    cfg: ScenarioConfig,
    method: Union[str, EstimationMethod] = EstimationMethod.SUBCLASSIFICATION,
    deltas: Sequence[float] = (0.0, 0.1, 0.2, 0.3, 0.5),
    oracle: Optional[OracleAte] = None,
    oracle_rows: int = 10**6,
    **kwargs,
) -> ReplicateSummary:
    """
    Sensitivity of the covariate-adjusted calibration arm to transportability violations: for every delta the
    replicate study is rerun with gamma1 redrawn from ``Normal(gamma1, (se + delta)^2)``.

    All deltas share the replicate data streams and the perturbation draws, so differences between rows are due to
    delta alone. Further keyword arguments go to :func:`run_replicates`.
    """
    if any(delta < 0 for delta in deltas):
        raise ValueError(f"deltas must be nonnegative, got {list(deltas)}")
    if oracle is None:
        oracle = oracle_ate(cfg, n_rows=oracle_rows)
    summary = ReplicateSummary([], oracle=oracle.to_dict())
    for delta in deltas:
        logger.info(f"Sensitivity run with delta {delta}")
        summary.extend(
            run_replicates(
                cfg,
                methods=[method],
                arms=[ExposureSource.RC_WITH_COVARIATES],
                oracle=oracle,
                perturbation_sd=float(delta),
                **kwargs,
            )
        )
    return summary
