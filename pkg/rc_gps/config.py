"""
Run configuration of the command line interface, loaded from one JSON file per run.

Errors name the offending field by its dotted path, e.g. ``bootstrap.replicates: must be nonnegative``.
"""

import json
import logging
import os
from dataclasses import asdict, dataclass, field, fields, replace
from typing import Any, Dict, List, Optional, Union

from rc_gps.bootstrap import BootstrapMode
from rc_gps.diagnostics import SdReference
from rc_gps.estimators import EstimationMethod, SubclassCountMode
from rc_gps.exceptions import ConfigError, InvalidSpecError
from rc_gps.gps import TrimmingStrategy
from rc_gps.models.OutcomeModel import Link, OutcomeModel
from rc_gps.outcome import ContrastScale
from rc_gps.pipeline import ExposureSource, RCGPSPipeline
from rc_gps.simulation import ALL_ARMS, ScenarioConfig
from rc_gps.tabular import ColumnRole, CutoffSpec
from rc_gps.util import dataclass_from_dict, parse_enum

CALIBRATION_ROLES = (
    ColumnRole.TRUE_EXPOSURE.value,
    ColumnRole.ERROR_PRONE_EXPOSURE.value,
    ColumnRole.CALIBRATION_COVARIATE.value,
)

logger = logging.getLogger(__name__)


def _nested(cls, value: Any, field_name: str):
    if value is None or isinstance(value, cls):
        return value
    return dataclass_from_dict(cls, value, field_name)


def _to_json_value(value: Any) -> Any:
    if isinstance(value, dict):
        return {key: _to_json_value(item) for key, item in value.items()}
    if isinstance(value, (list, tuple)):
        return [_to_json_value(item) for item in value]
    if hasattr(value, "value") and not isinstance(value, (int, float, str, bool)):
        return value.value
    return value


def _read_json(path: str) -> Dict[str, Any]:
    try:
        with open(path, encoding="utf-8") as fIn:
            return json.load(fIn)
    except OSError as error:
        raise ConfigError("", f"cannot read config file {path}: {error.strerror}") from error
    except json.JSONDecodeError as error:
        raise ConfigError("", f"{path} is not valid JSON: {error.msg} (line {error.lineno})") from error


def _check_count(name: str, value: Any, minimum: int) -> int:
    if isinstance(value, bool) or not isinstance(value, int) or value < minimum:
        raise ConfigError(name, f"must be an integer >= {minimum}, got {value!r}")
    return value


@dataclass
class GridConfig:
    """Grid-level exposure aggregated to the regions of the main study with area weights."""

    map_path: str = field(metadata={"help": "CSV with columns region_id, grid_id, area_weight."})
    values_path: str = field(metadata={"help": "CSV with the grid-level error-prone exposure."})
    grid_id_column: str = field(default="grid_id", metadata={"help": "Grid id column of values_path."})
    value_column: str = field(default="value", metadata={"help": "Exposure column of values_path."})
    exposure_name: str = field(default="region_exposure", metadata={"help": "Name of the aggregated column."})


@dataclass
class BootstrapConfig:
    replicates: int = field(default=0, metadata={"help": "Number of bootstrap replicates; 0 disables the bootstrap."})
    mode: Union[str, BootstrapMode] = field(default=BootstrapMode.STANDARD, metadata={"help": "Resampling scheme."})
    subsample_size: Optional[int] = field(default=None, metadata={"help": "m of the m-out-of-n bootstrap."})
    freeze_calibration: bool = field(default=False, metadata={"help": "Keep the full-data calibration model."})
    max_failure_rate: float = field(default=0.1, metadata={"help": "Share of replicates allowed to fail."})
    confidence_level: float = field(default=0.95, metadata={"help": "Coverage of the confidence intervals."})

    def __post_init__(self):
        self.mode = parse_enum(BootstrapMode, self.mode, "mode")
        if self.replicates != 0:
            _check_count("replicates", self.replicates, 2)
        if self.subsample_size is not None:
            _check_count("subsample_size", self.subsample_size, 2)
        if not 0 <= self.max_failure_rate < 1:
            raise ConfigError("max_failure_rate", f"must lie in [0, 1), got {self.max_failure_rate}")
        if not 0 < self.confidence_level < 1:
            raise ConfigError("confidence_level", f"must lie in (0, 1), got {self.confidence_level}")


@dataclass
class OutcomeConfig:
    link: Union[str, Link] = field(default=Link.IDENTITY, metadata={"help": "identity or log."})
    include_confounders: bool = field(default=False, metadata={"help": "Adjust the outcome model for C."})

    def __post_init__(self):
        self.link = parse_enum(Link, self.link, "link")

    def to_model(self) -> OutcomeModel:
        return OutcomeModel(self.link, self.include_confounders)


@dataclass
class PipelineConfig:
    """
    Configuration of ``rc-gps estimate`` and ``rc-gps diagnose``.

    Input paths are resolved relative to the directory of the config file; ``output_dir`` relative to the working
    directory.

    Example:
        ::

            {
                "main_path": "main.csv",
                "validation_path": "validation.csv",
                "roles": {"outcome": "y", "error_prone_exposure": "w", "confounder": ["c1", "c2"],
                          "calibration_covariate": ["d1"]},
                "validation_roles": {"true_exposure": "x", "error_prone_exposure": "w",
                                     "calibration_covariate": ["d1"]},
                "cutoffs": [8, 10],
                "method": "iptw",
                "bootstrap": {"replicates": 100}
            }
    """

    main_path: str = field(metadata={"help": "CSV of the main study."})
    roles: Dict[str, Any] = field(metadata={"help": "Column roles of the main study."})
    cutoffs: List[float] = field(metadata={"help": "Exposure cut-off points."})
    validation_path: Optional[str] = field(default=None, metadata={"help": "CSV of the validation study."})
    validation_roles: Optional[Dict[str, Any]] = field(
        default=None,
        metadata={"help": "Column roles of the validation study; defaults to the calibration roles of main."},
    )
    grid: Optional[Union[dict, GridConfig]] = field(default=None, metadata={"help": "Grid-to-region aggregation."})
    exposure_source: Union[str, ExposureSource] = field(
        default=ExposureSource.RC_WITH_COVARIATES, metadata={"help": "Which continuous exposure to categorize."}
    )
    method: Union[str, EstimationMethod] = field(
        default=EstimationMethod.SUBCLASSIFICATION, metadata={"help": "GPS implementation."}
    )
    n_subclasses: int = field(default=10, metadata={"help": "Number of subclasses K."})
    subclass_count_mode: Union[str, SubclassCountMode] = field(
        default=SubclassCountMode.ALL_UNITS, metadata={"help": "Subclass weighting."}
    )
    strict_subclasses: bool = field(default=False, metadata={"help": "Fail instead of merging subclasses."})
    weight_cap: Optional[float] = field(default=10.0, metadata={"help": "IPTW weight cap; null disables capping."})
    hajek: bool = field(default=False, metadata={"help": "Normalized IPTW means."})
    trimming: Union[str, TrimmingStrategy] = field(
        default=TrimmingStrategy.RANGE_INTERSECTION, metadata={"help": "Trimming strategy."}
    )
    trim_alpha: float = field(default=0.01, metadata={"help": "Quantile level of the quantile trimming."})
    ridge: Optional[float] = field(default=None, metadata={"help": "Ridge penalty of the GPS model."})
    ridge_fallback: bool = field(default=False, metadata={"help": "Refit with a small ridge on separation."})
    outcome_model: Optional[Union[dict, OutcomeConfig]] = field(
        default=None, metadata={"help": "Fit a GLM outcome model on the estimator's design."}
    )
    scales: Optional[List[str]] = field(default=None, metadata={"help": "Contrast scales."})
    reference: Optional[int] = field(default=None, metadata={"help": "Contrast against this category only."})
    balance_sd_reference: Union[str, SdReference] = field(
        default=SdReference.POOLED, metadata={"help": "Denominator of the standardized bias."}
    )
    overlap_bins: int = field(default=30, metadata={"help": "Histogram bins of the overlap summary."})
    bootstrap: Union[dict, BootstrapConfig] = field(default_factory=BootstrapConfig)
    seed: int = field(default=0, metadata={"help": "Seed of the bootstrap."})
    output_dir: str = field(default="rc_gps_output", metadata={"help": "Parent of the run directory."})

    def __post_init__(self):
        if not isinstance(self.roles, dict):
            raise ConfigError("roles", "must be an object mapping roles to column names")
        for section, roles in (("roles", self.roles), ("validation_roles", self.validation_roles or {})):
            for role in roles:
                parse_enum(ColumnRole, role, f"{section}.{role}")
        for required in (ColumnRole.OUTCOME, ColumnRole.CONFOUNDER):
            if required.value not in self.roles:
                raise ConfigError(f"roles.{required.value}", "is required")
        if not isinstance(self.cutoffs, list) or not self.cutoffs:
            raise ConfigError("cutoffs", "must be a nonempty list of numbers")
        try:
            CutoffSpec(self.cutoffs)
        except (InvalidSpecError, TypeError, ValueError) as error:
            raise ConfigError("cutoffs", str(error)) from None

        self.exposure_source = parse_enum(ExposureSource, self.exposure_source, "exposure_source")
        self.method = parse_enum(EstimationMethod, self.method, "method")
        self.subclass_count_mode = parse_enum(SubclassCountMode, self.subclass_count_mode, "subclass_count_mode")
        self.trimming = parse_enum(TrimmingStrategy, self.trimming, "trimming")
        self.balance_sd_reference = parse_enum(SdReference, self.balance_sd_reference, "balance_sd_reference")
        if self.scales is not None:
            self.scales = [parse_enum(ContrastScale, scale, "scales").value for scale in self.scales]
        _check_count("n_subclasses", self.n_subclasses, 1)
        _check_count("overlap_bins", self.overlap_bins, 1)
        if self.weight_cap is not None and not self.weight_cap > 0:
            raise ConfigError("weight_cap", f"must be positive or null, got {self.weight_cap}")
        self.grid = _nested(GridConfig, self.grid, "grid")
        self.outcome_model = _nested(OutcomeConfig, self.outcome_model, "outcome_model")
        self.bootstrap = _nested(BootstrapConfig, self.bootstrap, "bootstrap")

        if self.exposure_source.uses_calibration and self.validation_path is None:
            raise ConfigError("validation_path", f"is required for exposure_source {self.exposure_source.value}")
        if (
            self.method == EstimationMethod.MATCHING
            and self.bootstrap.replicates
            and self.bootstrap.mode != BootstrapMode.M_OUT_OF_N
        ):
            raise ConfigError("bootstrap.mode", "matching requires the m_out_of_n bootstrap")

    @property
    def main_roles(self) -> Dict[str, Any]:
        return dict(self.roles)

    @property
    def resolved_validation_roles(self) -> Dict[str, Any]:
        """The configured validation roles, else the exposure and calibration-covariate roles of the main study."""
        if self.validation_roles is not None:
            return dict(self.validation_roles)
        return {role: names for role, names in self.roles.items() if role in CALIBRATION_ROLES}

    def estimator_kwargs(self) -> Dict[str, Any]:
        if self.method == EstimationMethod.SUBCLASSIFICATION:
            return {
                "n_subclasses": self.n_subclasses,
                "strict": self.strict_subclasses,
                "count_mode": self.subclass_count_mode,
            }
        if self.method == EstimationMethod.IPTW:
            return {"weight_cap": self.weight_cap, "hajek": self.hajek}
        return {}

    def build_pipeline(self) -> RCGPSPipeline:
        return RCGPSPipeline(
            self.cutoffs,
            method=self.method,
            estimator_kwargs=self.estimator_kwargs(),
            exposure_source=self.exposure_source,
            trimming=self.trimming,
            trim_alpha=self.trim_alpha,
            ridge=self.ridge,
            ridge_fallback=self.ridge_fallback,
            outcome_model=None if self.outcome_model is None else self.outcome_model.to_model(),
            scales=self.scales,
            reference=self.reference,
        )

    def with_seed(self, seed: Optional[int]) -> "PipelineConfig":
        return self if seed is None else replace(self, seed=int(seed))

    def to_dict(self) -> Dict[str, Any]:
        return _to_json_value(asdict(self))

    @classmethod
    def from_dict(cls, values: Dict[str, Any], base_dir: Optional[str] = None) -> "PipelineConfig":
        config = dataclass_from_dict(cls, values)
        if base_dir:
            config = config.resolve_paths(base_dir)
        return config

    @classmethod
    def from_json(cls, path: str) -> "PipelineConfig":
        return cls.from_dict(_read_json(path), base_dir=os.path.dirname(os.path.abspath(path)))

    def resolve_paths(self, base_dir: str) -> "PipelineConfig":
        def resolve(path: Optional[str]) -> Optional[str]:
            return path if path is None or os.path.isabs(path) else os.path.join(base_dir, path)

        grid = self.grid
        if grid is not None:
            grid = replace(grid, map_path=resolve(grid.map_path), values_path=resolve(grid.values_path))
        return replace(
            self, main_path=resolve(self.main_path), validation_path=resolve(self.validation_path), grid=grid
        )


@dataclass
class SimulationConfig:
    """
    Configuration of ``rc-gps simulate``.

    ``scenario`` is a preset name or an object with an optional ``preset`` key plus field overrides.
    """

    scenario: Union[str, dict, ScenarioConfig] = field(default="default", metadata={"help": "The scenario."})
    methods: List[Union[str, EstimationMethod]] = field(
        default_factory=lambda: [EstimationMethod.SUBCLASSIFICATION], metadata={"help": "GPS implementations."}
    )
    arms: List[Union[str, ExposureSource]] = field(
        default_factory=lambda: list(ALL_ARMS), metadata={"help": "Exposure arms to compare."}
    )
    n_replicates: Optional[int] = field(default=None, metadata={"help": "R; defaults to the scenario's."})
    oracle_rows: int = field(default=10**6, metadata={"help": "Size of the oracle sample."})
    estimator_kwargs: Dict[str, dict] = field(default_factory=dict, metadata={"help": "Per-method estimator options."})
    trimming: Union[str, TrimmingStrategy] = field(default=TrimmingStrategy.RANGE_INTERSECTION)
    ridge_fallback: bool = field(default=False, metadata={"help": "Refit with a small ridge on separation."})
    bootstrap_replicates: int = field(default=0, metadata={"help": "Bootstrap replicates per Monte Carlo replicate."})
    sensitivity_deltas: Optional[List[float]] = field(
        default=None, metadata={"help": "Transportability perturbations; null skips the sensitivity study."}
    )
    sensitivity_method: Union[str, EstimationMethod] = field(default=EstimationMethod.SUBCLASSIFICATION)
    max_failure_rate: float = field(default=0.1, metadata={"help": "Share of replicates allowed to fail."})
    save_raw: bool = field(default=True, metadata={"help": "Write the per-replicate estimates."})
    seed: Optional[int] = field(default=None, metadata={"help": "Base seed; defaults to the scenario's."})
    output_dir: str = field(default="rc_gps_output", metadata={"help": "Parent of the run directory."})

    def __post_init__(self):
        if isinstance(self.scenario, str):
            self.scenario = {"preset": self.scenario}
        if not isinstance(self.scenario, ScenarioConfig):
            if not isinstance(self.scenario, dict):
                raise ConfigError("scenario", "must be a preset name or an object")
            self.scenario = ScenarioConfig.from_dict(self.scenario, field_path="scenario")
        self.methods = [parse_enum(EstimationMethod, method, "methods") for method in self.methods]
        self.arms = [parse_enum(ExposureSource, arm, "arms") for arm in self.arms]
        self.trimming = parse_enum(TrimmingStrategy, self.trimming, "trimming")
        self.sensitivity_method = parse_enum(EstimationMethod, self.sensitivity_method, "sensitivity_method")
        for method in self.estimator_kwargs:
            parse_enum(EstimationMethod, method, f"estimator_kwargs.{method}")
        if self.n_replicates is not None:
            _check_count("n_replicates", self.n_replicates, 1)
        _check_count("oracle_rows", self.oracle_rows, 1)
        _check_count("bootstrap_replicates", self.bootstrap_replicates, 0)
        if self.bootstrap_replicates == 1:
            raise ConfigError("bootstrap_replicates", "must be 0 or at least 2")
        if self.sensitivity_deltas is not None and any(delta < 0 for delta in self.sensitivity_deltas):
            raise ConfigError("sensitivity_deltas", "must be nonnegative")
        if not 0 <= self.max_failure_rate < 1:
            raise ConfigError("max_failure_rate", f"must lie in [0, 1), got {self.max_failure_rate}")

    @property
    def resolved_seed(self) -> int:
        return self.scenario.seed if self.seed is None else int(self.seed)

    def with_seed(self, seed: Optional[int]) -> "SimulationConfig":
        return self if seed is None else replace(self, seed=int(seed))

    def to_dict(self) -> Dict[str, Any]:
        values = {item.name: getattr(self, item.name) for item in fields(self)}
        values["scenario"] = self.scenario.to_dict()
        return _to_json_value(values)

    @classmethod
    def from_dict(cls, values: Dict[str, Any]) -> "SimulationConfig":
        return dataclass_from_dict(cls, values)

    @classmethod
    def from_json(cls, path: str) -> "SimulationConfig":
        return cls.from_dict(_read_json(path))
