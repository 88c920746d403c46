__version__ = "0.1.0.dev0"

from rc_gps.bootstrap import BootstrapMode, bootstrap_ate
from rc_gps.calibration import fit_rc, perturb_gamma1, predict_xhat
from rc_gps.estimators import (
    EstimationMethod,
    IPTWEstimator,
    MatchingEstimator,
    PotentialOutcomeEstimates,
    SubclassificationEstimator,
    estimate_iptw,
    estimate_matching,
    estimate_subclassification,
)
from rc_gps.gps import TrimmingStrategy, fit_multinomial, predict_gps, trim_overlap
from rc_gps.LoggingHandler import LoggingHandler, install_logger
from rc_gps.models import GpsMatrix, GpsModel, Link, OutcomeModel, RcModel
from rc_gps.outcome import AteTable, ContrastScale, ate_contrasts, fit_outcome_glm
from rc_gps.pipeline import ExposureSource, RCGPSPipeline
from rc_gps.tabular import ColumnRole, CutoffSpec, TabularDataset, categorize, read_csv, write_csv

__all__ = [
    "LoggingHandler",
    "install_logger",
    "ColumnRole",
    "CutoffSpec",
    "TabularDataset",
    "categorize",
    "read_csv",
    "write_csv",
    "RcModel",
    "GpsModel",
    "GpsMatrix",
    "OutcomeModel",
    "Link",
    "fit_rc",
    "predict_xhat",
    "perturb_gamma1",
    "fit_multinomial",
    "predict_gps",
    "trim_overlap",
    "TrimmingStrategy",
    "EstimationMethod",
    "PotentialOutcomeEstimates",
    "SubclassificationEstimator",
    "IPTWEstimator",
    "MatchingEstimator",
    "estimate_subclassification",
    "estimate_iptw",
    "estimate_matching",
    "AteTable",
    "ContrastScale",
    "ate_contrasts",
    "fit_outcome_glm",
    "ExposureSource",
    "RCGPSPipeline",
    "BootstrapMode",
    "bootstrap_ate",
]
