"""Post-estimation statistics for an ordered logit fit."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DataError, EstimationError
from .ologit import OrderedLogitFit, null_log_likelihood
from .special import chi2_sf

__all__ = [
    "FitReport",
    "ReportRow",
    "lr_test",
    "mcfadden_rho2",
    "null_log_likelihood",
    "report",
    "significance",
    "STAR_THRESHOLDS",
]

# two-sided normal critical values
STAR_THRESHOLDS = ((2.576, "99%"), (1.960, "95%"), (1.645, "90%"))
STARS = {"99%": "***", "95%": "**", "90%": "*", None: ""}


def significance(t_statistic: float) -> str | None:
    """Highest significance level reached by ``|t|``, or ``None``."""
    t = abs(t_statistic)
    for critical, level in STAR_THRESHOLDS:
        if t >= critical:
            return level
    return None


def lr_test(fit_ll: float, null_ll: float, df: int) -> tuple[float, int, float]:
    """Likelihood-ratio chi-square of a fitted model against the null model."""
    if fit_ll < null_ll:
        raise EstimationError(f"fitted log-likelihood {fit_ll} is below the null model's {null_ll}; the fit failed")
    chi_square = 2.0 * (fit_ll - null_ll)
    p_value = chi2_sf(chi_square, df) if df > 0 else 1.0
    return chi_square, df, p_value


def mcfadden_rho2(fit_ll: float, null_ll: float) -> float:
    if not null_ll < 0:
        raise DataError("null log-likelihood must be negative")
    if fit_ll < null_ll:
        raise EstimationError("fitted log-likelihood is below the null model's")
    return 1.0 - fit_ll / null_ll


@dataclass(frozen=True)
class ReportRow:
    group: str
    label: str
    estimate: float
    standard_error: float
    t_statistic: float
    significance: str | None

    @property
    def stars(self) -> str:
        return STARS[self.significance]


@dataclass(frozen=True)
class FitReport:
    rows: tuple[ReportRow, ...]
    lr_chi_square: float
    lr_df: int
    lr_p_value: float
    mcfadden_rho2: float
    log_likelihood: float
    null_log_likelihood: float
    n_obs: int
    iterations: int
    converged: bool


def report(fit: OrderedLogitFit, labels=None) -> FitReport:
    """Table of estimates with standard errors, t-ratios and significance.

    Cut-off rows come first (``Cut-off Point j``), then one row per slope.
    """
    if fit.covariance is None:
        raise EstimationError("fit has no covariance matrix")
    labels = tuple(labels if labels is not None else fit.labels)
    K = fit.params.beta.size
    if len(labels) != K:
        raise DataError(f"{len(labels)} labels for {K} coefficients")
    variances = np.diag(fit.covariance)
    if np.any(variances < 0):
        bad = int(np.argmin(variances))
        raise EstimationError(f"negative variance on the covariance diagonal at position {bad}")
    se = np.sqrt(variances)

    rows = []
    for j, c in enumerate(fit.params.cutoffs):
        s = float(se[K + j])
        t = float(c) / s
        rows.append(ReportRow("Thresholds", f"Cut-off Point {j + 1}", float(c), s, t, significance(t)))
    for k, (b, lab) in enumerate(zip(fit.params.beta, labels)):
        group, label = (lab if isinstance(lab, tuple) else ("", str(lab)))
        s = float(se[k])
        t = float(b) / s
        rows.append(ReportRow(group, label, float(b), s, t, significance(t)))

    chi, df, p = lr_test(fit.log_likelihood, fit.null_log_likelihood, K)
    return FitReport(
        rows=tuple(rows),
        lr_chi_square=chi,
        lr_df=df,
        lr_p_value=p,
        mcfadden_rho2=mcfadden_rho2(fit.log_likelihood, fit.null_log_likelihood),
        log_likelihood=fit.log_likelihood,
        null_log_likelihood=fit.null_log_likelihood,
        n_obs=fit.n_obs,
        iterations=fit.iterations,
        converged=fit.converged,
    )
