"""Pearson chi-square test of independence with cell residuals.

Residuals are signed so that over-represented cells (observed above expected)
are positive: ``(O - E) / sqrt(E)``. The square of the residuals sums to the
chi-square statistic.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .errors import DataError, SparseCellWarning
from .schema import Dataset
from .special import chi2_sf


@dataclass(frozen=True)
class ContingencyResult:
    observed: np.ndarray
    expected: np.ndarray
    residuals: np.ndarray
    chi_square: float
    df: int
    p_value: float
    row_labels: tuple[str, ...] = ()
    col_labels: tuple[str, ...] = ()

    @property
    def cell_frequency_pct(self) -> np.ndarray:
        return 100.0 * self.observed / self.observed.sum()

    def transpose(self) -> "ContingencyResult":
        return ContingencyResult(
            self.observed.T, self.expected.T, self.residuals.T,
            self.chi_square, self.df, self.p_value,
            self.col_labels, self.row_labels,
        )


def _as_table(observed) -> np.ndarray:
    table = np.asarray(observed, dtype=float)
    if table.ndim != 2:
        raise DataError("contingency table must be two-dimensional")
    if np.any(table < 0) or not np.all(np.isfinite(table)):
        raise DataError("contingency table must hold finite nonnegative counts")
    return table


def observed_table(dataset: Dataset, var_a: str, var_b: str) -> tuple[np.ndarray, tuple[str, ...], tuple[str, ...]]:
    """Cross-classify two variables (the outcome column is allowed).

    Returns the integer count matrix and the row and column labels.
    """
    codes_a, labels_a = dataset.column(var_a)
    codes_b, labels_b = dataset.column(var_b)
    R, C = len(labels_a), len(labels_b)
    counts = np.bincount(codes_a * C + codes_b, minlength=R * C).reshape(R, C)
    return counts, labels_a, labels_b


def expected_counts(observed) -> np.ndarray:
    table = _as_table(observed)
    grand = table.sum()
    if grand <= 0:
        raise DataError("contingency table has zero grand total")
    return np.outer(table.sum(axis=1), table.sum(axis=0)) / grand


def pearson_residuals(observed) -> np.ndarray:
    table = _as_table(observed)
    expected = expected_counts(table)
    if np.any(expected <= 0):
        raise DataError("contingency table has a cell with zero expected count (empty row or column)")
    return (table - expected) / np.sqrt(expected)


def chi_square_test(observed, row_labels=(), col_labels=()) -> ContingencyResult:
    table = _as_table(observed)
    R, C = table.shape
    if R < 2 or C < 2:
        raise DataError(f"degenerate table of shape {R}x{C}; need at least 2x2")
    expected = expected_counts(table)
    residuals = pearson_residuals(table)
    n_sparse = int(np.sum(expected < 5))
    if n_sparse:
        warnings.warn(f"{n_sparse} cell(s) with expected count below 5", SparseCellWarning, stacklevel=2)
    chi_square = float(np.sum(residuals**2))
    df = (R - 1) * (C - 1)
    return ContingencyResult(
        observed=table,
        expected=expected,
        residuals=residuals,
        chi_square=chi_square,
        df=df,
        p_value=chi2_sf(chi_square, df),
        row_labels=tuple(row_labels),
        col_labels=tuple(col_labels),
    )


def chi_square_from_dataset(dataset: Dataset, var_a: str, var_b: str) -> ContingencyResult:
    if var_a == var_b:
        raise DataError("chi-square test needs two distinct variables")
    counts, labels_a, labels_b = observed_table(dataset, var_a, var_b)
    return chi_square_test(counts, labels_a, labels_b)
