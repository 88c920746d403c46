"""
Command line interface::

    rc-gps estimate CONFIG [--seed N]   # calibration, GPS, trimming, estimation, contrasts (+ bootstrap)
    rc-gps diagnose CONFIG [--seed N]   # balance, overlap and population-shift reports only
    rc-gps simulate CONFIG [--seed N]   # replicate study on a synthetic scenario

Every run writes into ``<output_dir>/run-<config hash>-seed<seed>/`` together with a ``manifest.json``. Exit codes:
0 on success, 2 on data or configuration errors, 3 on convergence or replicate-failure errors.
"""

import argparse
import logging
import os
import sys
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np

from rc_gps import __version__
from rc_gps.bootstrap import bootstrap_ate
from rc_gps.config import PipelineConfig, SimulationConfig
from rc_gps.diagnostics import balance_report, overlap_summary, population_shift
from rc_gps.exceptions import RcGpsError
from rc_gps.gps import TrimmingStrategy
from rc_gps.LoggingHandler import install_logger
from rc_gps.pipeline import PipelineResult
from rc_gps.simulation import oracle_ate, run_replicates, run_sensitivity
from rc_gps.simulation.scenario import ORACLE_STREAM
from rc_gps.tabular import ColumnRole, GridRegionMap, TabularDataset, aggregate_regions, align_regions, read_csv
from rc_gps.util import config_hash, make_rng, write_csv_rows, write_json

logger = logging.getLogger(__name__)


def prepare_run_dir(output_dir: str, config: Dict[str, Any], seed: int) -> Tuple[str, str]:
    """Creates ``<output_dir>/run-<hash12>-seed<seed>`` and returns it with the full config hash."""
    digest = config_hash(config)
    run_dir = os.path.join(output_dir, f"run-{digest[:12]}-seed{seed}")
    os.makedirs(run_dir, exist_ok=True)
    return run_dir, digest


def write_manifest(
    run_dir: str,
    command: str,
    digest: str,
    seed: int,
    config: Dict[str, Any],
    files: List[str],
    extra: Optional[Dict[str, Any]] = None,
):
    manifest = {
        "command": command,
        "config": config,
        "config_hash": digest,
        "files": sorted(files),
        "seed": seed,
        "version": __version__,
    }
    manifest.update(extra or {})
    write_json(os.path.join(run_dir, "manifest.json"), manifest)


def load_studies(config: PipelineConfig) -> Tuple[TabularDataset, Optional[TabularDataset]]:
    """Reads the main and validation studies; with a ``grid`` section the error-prone exposure of the main study is
    the area-weighted average of the grid values over each region."""
    main_roles = config.main_roles
    if config.grid is not None:
        main_roles.pop(ColumnRole.ERROR_PRONE_EXPOSURE.value, None)
    main = read_csv(config.main_path, roles=main_roles)
    if config.grid is not None:
        region_map = GridRegionMap.from_csv(config.grid.map_path)
        grid_values = read_csv(config.grid.values_path)
        region_values = aggregate_regions(
            grid_values.column(config.grid.value_column),
            region_map,
            grid_values.column(config.grid.grid_id_column),
        )
        main = align_regions(main, region_values, name=config.grid.exposure_name)

    validation = None
    if config.validation_path is not None:
        validation = read_csv(config.validation_path, roles=config.resolved_validation_roles)
    logger.info(
        f"Loaded main study ({main.n_rows} rows)"
        + ("" if validation is None else f" and validation study ({validation.n_rows} rows)")
    )
    return main, validation


def write_diagnostics(run_dir: str, config: PipelineConfig, main: TabularDataset, result: PipelineResult) -> List[str]:
    files = []
    trimmed = result.trim.dataset
    confounders = list(trimmed.role_columns(ColumnRole.CONFOUNDER))
    balance = balance_report(
        trimmed.role_matrix(ColumnRole.CONFOUNDER),
        confounders,
        result.trim.xc,
        result.estimates,
        kept_fraction=result.trim.kept_fraction,
        sd_reference=config.balance_sd_reference,
    )
    balance.to_csv(os.path.join(run_dir, "balance.csv"))
    balance.to_json(os.path.join(run_dir, "balance.json"))
    files += ["balance.csv", "balance.json"]

    overlap = overlap_summary(result.gps, result.xc, bins=config.overlap_bins)
    overlap.histogram_to_csv(os.path.join(run_dir, "overlap_histogram.csv"))
    overlap.ranges_to_csv(os.path.join(run_dir, "overlap_ranges.csv"))
    files += ["overlap_histogram.csv", "overlap_ranges.csv"]

    if config.trimming != TrimmingStrategy.NONE:
        shift = population_shift(main.role_matrix(ColumnRole.CONFOUNDER), confounders, result.trim.kept_index)
        shift.to_csv(os.path.join(run_dir, "population_shift.csv"))
        files.append("population_shift.csv")
    return files


def _write_audit(run_dir: str, result: PipelineResult) -> List[str]:
    """The estimator's design, with units numbered by their row in the main study."""
    rows = result.trim.kept_index + 1
    estimates = result.estimates
    if estimates.weights is not None:
        path = os.path.join(run_dir, "weights.csv")
        write_csv_rows(path, ["unit", "category", "weight"], zip(rows, result.trim.xc, estimates.weights))
        return ["weights.csv"]
    if estimates.subclasses is not None:
        estimates.subclasses.to_csv(os.path.join(run_dir, "subclasses.csv"), index=rows)
        return ["subclasses.csv"]
    estimates.matches.to_csv(os.path.join(run_dir, "matches.csv"), index=rows)
    return ["matches.csv"]


def cmd_estimate(config: PipelineConfig) -> str:
    """Runs the whole procedure on user data and writes contrasts, diagnostics and fitted models."""
    main, validation = load_studies(config)
    pipeline = config.build_pipeline()
    logger.info(f"Running {pipeline}")
    result = pipeline.run(main, validation)
    table = result.table
    if config.bootstrap.replicates:
        table = bootstrap_ate(
            pipeline,
            main,
            validation,
            n_replicates=config.bootstrap.replicates,
            mode=config.bootstrap.mode,
            seed=config.seed,
            subsample_size=config.bootstrap.subsample_size,
            freeze_calibration=config.bootstrap.freeze_calibration,
            max_failure_rate=config.bootstrap.max_failure_rate,
            confidence_level=config.bootstrap.confidence_level,
            point=result,
        )

    payload = config.to_dict()
    run_dir, digest = prepare_run_dir(config.output_dir, payload, config.seed)
    table.to_csv(os.path.join(run_dir, "ate.csv"))
    table.to_json(os.path.join(run_dir, "ate.json"))
    files = ["ate.csv", "ate.json"]
    files += write_diagnostics(run_dir, config, main, result)
    result.gps.to_csv(os.path.join(run_dir, "gps.csv"))
    result.gps_model.save(os.path.join(run_dir, "gps_model.json"))
    files += ["gps.csv", "gps_model.json"]
    if result.rc_model is not None:
        result.rc_model.save(os.path.join(run_dir, "rc_model.json"))
        files.append("rc_model.json")
    files += _write_audit(run_dir, result)
    if table.replicates is not None:
        table.replicates_to_csv(os.path.join(run_dir, "bootstrap_replicates.csv"))
        files.append("bootstrap_replicates.csv")

    write_manifest(run_dir, "estimate", digest, config.seed, payload, files)
    logger.info(f"Wrote {len(files)} files to {run_dir}")
    return run_dir


def cmd_diagnose(config: PipelineConfig) -> str:
    """Writes the balance, overlap and population-shift reports only."""
    main, validation = load_studies(config)
    result = config.build_pipeline().run(main, validation)
    payload = config.to_dict()
    run_dir, digest = prepare_run_dir(config.output_dir, payload, config.seed)
    files = write_diagnostics(run_dir, config, main, result)
    write_manifest(run_dir, "diagnose", digest, config.seed, payload, files)
    logger.info(f"Wrote {len(files)} files to {run_dir}")
    return run_dir


def cmd_simulate(config: SimulationConfig) -> str:
    """Runs the replicate study (and optionally the transportability sensitivity study) on the scenario."""
    cfg = config.scenario
    seed = config.resolved_seed
    oracle = oracle_ate(cfg, n_rows=config.oracle_rows, seed=make_rng(seed, ORACLE_STREAM))
    options = {
        "n_replicates": config.n_replicates,
        "seed": seed,
        "oracle": oracle,
        "estimator_kwargs": config.estimator_kwargs,
        "trimming": config.trimming,
        "ridge_fallback": config.ridge_fallback,
        "bootstrap_replicates": config.bootstrap_replicates,
        "max_failure_rate": config.max_failure_rate,
    }
    summary = run_replicates(cfg, methods=config.methods, arms=config.arms, **options)

    payload = config.to_dict()
    run_dir, digest = prepare_run_dir(config.output_dir, payload, seed)
    summary.to_csv(os.path.join(run_dir, "summary.csv"))
    summary.to_json(os.path.join(run_dir, "summary.json"))
    write_json(os.path.join(run_dir, "oracle.json"), oracle.to_dict())
    files = ["summary.csv", "summary.json", "oracle.json"]
    if config.save_raw:
        summary.raw_to_csv(os.path.join(run_dir, "raw_estimates.csv"))
        files.append("raw_estimates.csv")
    if config.sensitivity_deltas is not None:
        sensitivity = run_sensitivity(cfg, config.sensitivity_method, config.sensitivity_deltas, **options)
        sensitivity.to_csv(os.path.join(run_dir, "sensitivity.csv"))
        files.append("sensitivity.csv")

    extra = {"oracle_ate": list(oracle.consecutive)}
    if oracle.reference is not None:
        extra["oracle_reference"] = oracle.reference
    write_manifest(run_dir, "simulate", digest, seed, payload, files, extra=extra)
    logger.info(f"Wrote {len(files)} files to {run_dir}")
    return run_dir


COMMANDS = {
    "estimate": (PipelineConfig, cmd_estimate),
    "diagnose": (PipelineConfig, cmd_diagnose),
    "simulate": (SimulationConfig, cmd_simulate),
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="rc-gps",
        description="Causal effects of a categorized, error-prone exposure with regression calibration and GPS.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    subparsers = parser.add_subparsers(dest="command", required=True)
    for name, (_, command) in COMMANDS.items():
        subparser = subparsers.add_parser(name, help=command.__doc__.strip().splitlines()[0])
        subparser.add_argument("config", help="path to the JSON run configuration")
        subparser.add_argument("--seed", type=int, default=None, help="override the seed of the configuration")
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    install_logger()
    config_cls, command = COMMANDS[args.command]
    try:
        config = config_cls.from_json(args.config).with_seed(args.seed)
        run_dir = command(config)
    except RcGpsError as error:
        print(f"rc-gps {args.command}: error: {error}", file=sys.stderr)
        return error.exit_code
    except (ValueError, OSError) as error:
        print(f"rc-gps {args.command}: error: {error}", file=sys.stderr)
        return 2
    except np.linalg.LinAlgError as error:
        print(f"rc-gps {args.command}: error: {error}", file=sys.stderr)
        return 3
    print(run_dir)
    return 0
