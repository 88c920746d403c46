"""
The two-stage RC-GPS procedure:

1. fit the calibration model on the validation study,
2. predict the corrected exposure in the main study,
3. categorize it with the cut-offs,
4. fit the GPS model of the category on the confounders,
5. trim units outside the common support,
6. estimate the potential-outcome means with a GPS implementation (optionally through an outcome model),
7. contrast the means.

Bootstrap inference over the whole procedure lives in :mod:`rc_gps.bootstrap`.
"""

import logging
from dataclasses import dataclass
from enum import Enum
from typing import Iterable, List, Optional, Sequence, Union

import numpy as np

from rc_gps.calibration import fit_rc
from rc_gps.estimators import EstimationMethod, GPSEstimator, PotentialOutcomeEstimates
from rc_gps.exceptions import SchemaError
from rc_gps.gps import GpsMatrix, GpsModel, TrimmingStrategy, TrimResult, fit_multinomial, trim_overlap
from rc_gps.models.OutcomeModel import OutcomeModel
from rc_gps.models.RcModel import RcModel
from rc_gps.outcome import AteTable, ContrastScale, ate_contrasts, default_scales, fit_outcome_glm
from rc_gps.tabular import ColumnRole, CutoffSpec, TabularDataset

logger = logging.getLogger(__name__)

CATEGORY_COLUMN = "exposure_category"
EXPOSURE_COLUMN = "exposure_used"


class ExposureSource(Enum):
    """
    The continuous exposure the categories are built from:

    - ``ExposureSource.ERROR_FREE`` (``"error_free"``): the true exposure X (only available in simulations)
    - ``ExposureSource.ERROR_PRONE`` (``"error_prone"``): the error-prone exposure W, uncorrected
    - ``ExposureSource.RC_NO_COVARIATES`` (``"rc_no_covariates"``): calibrated from ``X ~ W``
    - ``ExposureSource.RC_WITH_COVARIATES`` (``"rc_with_covariates"``): calibrated from ``X ~ W + D``
    """

    ERROR_FREE = "error_free"
    ERROR_PRONE = "error_prone"
    RC_NO_COVARIATES = "rc_no_covariates"
    RC_WITH_COVARIATES = "rc_with_covariates"

    @staticmethod
    def possible_values() -> List[str]:
        return [source.value for source in ExposureSource]

    @property
    def uses_calibration(self) -> bool:
        return self in (ExposureSource.RC_NO_COVARIATES, ExposureSource.RC_WITH_COVARIATES)


@dataclass
class PipelineResult:
    """
    Everything one run of :class:`RCGPSPipeline` produced.

    Args:
        table: the ATE contrasts (point estimates)
        estimates: the potential-outcome means the contrasts were computed from
        dataset: the main study with the used exposure and its category added
        exposure: the continuous exposure that was categorized
        xc: exposure categories of all main-study units (before trimming)
        gps_model: the fitted GPS model
        gps: the GPS of all main-study units (before trimming)
        trim: the trimming result
        rc_model: the calibration model (None when no calibration was used)
        outcome_model: the fitted outcome model (None when the estimator means were used directly)
    """

    table: AteTable
    estimates: PotentialOutcomeEstimates
    dataset: TabularDataset
    exposure: np.ndarray
    xc: np.ndarray
    gps_model: GpsModel
    gps: GpsMatrix
    trim: TrimResult
    rc_model: Optional[RcModel] = None
    outcome_model: Optional[OutcomeModel] = None


class RCGPSPipeline:
    """
    Runs calibration, categorization, GPS estimation, trimming, a GPS implementation and the ATE contrasts.

    Args:
        cutoffs: the exposure cut-offs
        method: the GPS implementation. Defaults to subclassification.
        estimator_kwargs: keyword arguments of the estimator (``n_subclasses``, ``weight_cap``, ``hajek``, ...)
        exposure_source: which exposure to categorize. Defaults to the covariate-adjusted calibration.
        trimming: trimming strategy. Defaults to the range-intersection rule.
        trim_alpha: quantile level of the quantile trimming strategy. Defaults to 0.01.
        ridge: ridge penalty of the GPS model. Defaults to none.
        ridge_fallback: refit the GPS model with a small ridge penalty on separation. Defaults to False.
        outcome_model: fit this outcome model on the estimator's design instead of using its means directly
        scales: contrast scales. Defaults to differences for the identity link and ratios for the log link.
        reference: contrast every category against this one only. Defaults to all ordered pairs.

    Example:
        ::

            from rc_gps.pipeline import RCGPSPipeline
            from rc_gps.tabular import CutoffSpec

            pipeline = RCGPSPipeline(CutoffSpec([-5, 15]), method="iptw", estimator_kwargs={"weight_cap": 10})
            result = pipeline.run(main, validation)
            print(result.table)
    """

    def __init__(
        self,
        cutoffs: Union[CutoffSpec, Sequence[float]],
        method: Union[str, EstimationMethod] = EstimationMethod.SUBCLASSIFICATION,
        estimator_kwargs: Optional[dict] = None,
        exposure_source: Union[str, ExposureSource] = ExposureSource.RC_WITH_COVARIATES,
        trimming: Union[str, TrimmingStrategy] = TrimmingStrategy.RANGE_INTERSECTION,
        trim_alpha: float = 0.01,
        ridge: Optional[float] = None,
        ridge_fallback: bool = False,
        outcome_model: Optional[OutcomeModel] = None,
        scales: Optional[Iterable[Union[str, ContrastScale]]] = None,
        reference: Optional[int] = None,
    ):
        self.cutoffs = cutoffs if isinstance(cutoffs, CutoffSpec) else CutoffSpec(cutoffs)
        self.method = EstimationMethod(method)
        self.estimator_kwargs = dict(estimator_kwargs or {})
        self.exposure_source = ExposureSource(exposure_source)
        self.trimming = TrimmingStrategy(trimming)
        self.trim_alpha = trim_alpha
        self.ridge = ridge
        self.ridge_fallback = ridge_fallback
        self.outcome_model = outcome_model
        if scales is None:
            scales = default_scales(outcome_model.link) if outcome_model is not None else [ContrastScale.DIFFERENCE]
        self.scales = [ContrastScale(scale) for scale in scales]
        self.reference = reference
        self.estimator: GPSEstimator = self.method.to_estimator(**self.estimator_kwargs)

    def exposure(
        self, main: TabularDataset, validation: Optional[TabularDataset] = None, rc_model: Optional[RcModel] = None
    ) -> tuple:
        """Returns the continuous exposure of the main study per ``exposure_source`` and the calibration model."""
        if self.exposure_source == ExposureSource.ERROR_FREE:
            return main.role_values(ColumnRole.TRUE_EXPOSURE), None
        if self.exposure_source == ExposureSource.ERROR_PRONE:
            return main.role_values(ColumnRole.ERROR_PRONE_EXPOSURE), None
        if rc_model is None:
            if validation is None:
                raise SchemaError("A validation study is required to fit the calibration model")
            covariates = () if self.exposure_source == ExposureSource.RC_NO_COVARIATES else None
            rc_model = fit_rc(validation, covariates=covariates)
        return rc_model.predict(main), rc_model

    def run(
        self, main: TabularDataset, validation: Optional[TabularDataset] = None, rc_model: Optional[RcModel] = None
    ) -> PipelineResult:
        """
        Runs the procedure on ``main``.

        Args:
            main: the main study; needs roles ``outcome`` and ``confounder`` and the exposure of the source
            validation: the validation study, needed when calibrating and no ``rc_model`` is given
            rc_model: use this calibration model instead of fitting one

        Returns:
            PipelineResult: the contrasts and all intermediate results
        """
        exposure, rc_model = self.exposure(main, validation, rc_model)
        xc = self.cutoffs.categorize(exposure)
        dataset = main.with_column(EXPOSURE_COLUMN, exposure).with_column(
            CATEGORY_COLUMN, xc, role=ColumnRole.CATEGORICAL_EXPOSURE
        )

        confounders = main.role_columns(ColumnRole.CONFOUNDER)
        gps_model = fit_multinomial(
            xc,
            main.matrix(confounders),
            n_categories=self.cutoffs.n_categories,
            confounder_names=confounders,
            ridge=self.ridge,
            ridge_fallback=self.ridge_fallback,
        )
        gps = gps_model.predict(main.matrix(confounders))
        trim = trim_overlap(dataset, gps, xc, strategy=self.trimming, alpha=self.trim_alpha)

        y = trim.dataset.role_values(ColumnRole.OUTCOME)
        estimates = self.estimator(y, trim.xc, trim.gps)
        outcome_model = None
        if self.outcome_model is not None:
            outcome_model = fit_outcome_glm(trim.dataset, estimates, self.outcome_model)
            estimates = outcome_model.potential_outcomes

        table = ate_contrasts(estimates, self.scales, self.reference)
        return PipelineResult(
            table=table,
            estimates=estimates,
            dataset=dataset,
            exposure=exposure,
            xc=xc,
            gps_model=gps_model,
            gps=gps,
            trim=trim,
            rc_model=rc_model,
            outcome_model=outcome_model,
        )

    def __repr__(self) -> str:
        return (
            f"RCGPSPipeline(cutoffs={self.cutoffs.to_list()}, method={self.method.value}, "
            f"exposure_source={self.exposure_source.value}, trimming={self.trimming.value}, "
            f"estimator={self.estimator!r})"
        )
