"""Ordered-logit crash severity analysis: ingestion, chi-square association,
maximum-likelihood estimation, inference and marginal effects."""

from .contingency import ContingencyResult, chi_square_test, expected_counts, observed_table, pearson_residuals
from .errors import DataError, EstimationError, OrdsevError, SchemaError
from .ologit import (
    FitOptions,
    OrderedLogitFit,
    OrderedLogitParams,
    class_probabilities,
    fit,
    gradient,
    log_likelihood,
    logistic_cdf,
)
from .schema import CategoricalSchema, Dataset, DesignMatrix, VariableSpec, crosstab, encode_design, ingest_records, parse_schema

__version__ = "0.1.0"
