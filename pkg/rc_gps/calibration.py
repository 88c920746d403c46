"""
Regression calibration: fit ``E(X | W, D)`` on the validation study and predict the corrected exposure in the
main study.
"""

import logging
from typing import Optional, Sequence, Union

import numpy as np

from rc_gps.exceptions import InvalidDataError
from rc_gps.models.RcModel import RcModel
from rc_gps.tabular import ColumnRole, TabularDataset
from rc_gps.util import least_squares

logger = logging.getLogger(__name__)


def fit_rc(validation: TabularDataset, covariates: Optional[Sequence[str]] = None) -> RcModel:
    """
    Fits the linear calibration model ``X = gamma0 + gamma1 W + gamma2^T D + e`` by ordinary least squares.

    Args:
        validation: the validation study; needs columns with roles ``true_exposure`` and ``error_prone_exposure``
        covariates: names of the calibration covariates D. Defaults to the columns with role
            ``calibration_covariate``; pass ``()`` to fit ``X ~ W`` only.

    Returns:
        RcModel: the fitted model, with classical OLS standard errors

    Raises:
        SingularDesignError: if the design is rank deficient; the error names the collinear columns
        InvalidDataError: if there are not more rows than coefficients

    Example:
        ::

            from rc_gps.calibration import fit_rc, predict_xhat

            rc_model = fit_rc(validation)
            xhat = predict_xhat(rc_model, main)
    """
    x_name = validation.role_column(ColumnRole.TRUE_EXPOSURE)
    w_name = validation.role_column(ColumnRole.ERROR_PRONE_EXPOSURE)
    if covariates is None:
        covariates = validation.role_columns(ColumnRole.CALIBRATION_COVARIATE)
    covariates = list(covariates)

    x = validation.column(x_name)
    n_rows = validation.n_rows
    n_coef = 2 + len(covariates)
    if n_rows <= n_coef:
        raise InvalidDataError(
            f"Validation study has {n_rows} rows, need more than {n_coef} to fit {n_coef} coefficients"
        )

    design = np.column_stack([np.ones(n_rows), validation.column(w_name), validation.matrix(covariates)])
    fit = least_squares(design, x, column_names=["intercept", w_name] + covariates)

    rss = fit.rss
    # residuals at rounding level count as an exact fit
    if rss <= (np.finfo(float).eps * np.linalg.norm(x)) ** 2 * n_rows:
        rss = 0.0
    residual_variance = rss / fit.df_resid
    tss = float(np.sum((x - x.mean()) ** 2))
    if rss == 0.0 or tss == 0.0:
        r_squared = 1.0
    else:
        r_squared = min(max(1.0 - rss / tss, 0.0), np.nextafter(1.0, 0.0))
    standard_errors = np.sqrt(np.diag(fit.unscaled_cov) * residual_variance)

    model = RcModel(
        gamma0=fit.coef[0],
        gamma1=fit.coef[1],
        gamma2=fit.coef[2:],
        covariate_names=covariates,
        residual_variance=residual_variance,
        r_squared=r_squared,
        standard_errors=standard_errors,
        n_obs=n_rows,
        exposure_name=w_name,
    )
    logger.info(
        f"Calibration fit on {n_rows} rows: gamma1={model.gamma1:.4f} (se {model.se_gamma1:.4f}), "
        f"R^2={r_squared:.4f}, residual variance={residual_variance:.4f}"
    )
    return model


def predict_xhat(model: RcModel, main: TabularDataset) -> np.ndarray:
    """Predicts ``X_hat = gamma0 + gamma1 W + gamma2^T D`` for every row of the main study."""
    return model.predict(main)


def perturb_gamma1(model: RcModel, delta_sd: float, seed: Union[int, np.random.Generator, None] = None) -> RcModel:
    """
    Returns a copy of ``model`` with gamma1 drawn from ``Normal(gamma1, (se(gamma1) + delta_sd)^2)``.

    Args:
        model: a model fitted with standard errors
        delta_sd: nonnegative amount added to the standard error of gamma1
        seed: seed or generator; the draw is deterministic for a fixed integer seed

    Raises:
        ValueError: if ``delta_sd`` is negative or the model has no standard errors
    """
    return model.perturbed(delta_sd, seed)
