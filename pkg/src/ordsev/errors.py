class OrdsevError(Exception):
    """Base class for errors raised by this package."""


class SchemaError(OrdsevError, ValueError):
    """Invalid or inconsistent schema."""


class DataError(OrdsevError, ValueError):
    """Input records or tables that do not fit the schema or preconditions."""


class EstimationError(OrdsevError, RuntimeError):
    """Numerical failure during or after estimation."""


class SeparationWarning(UserWarning):
    """A dummy perfectly predicts a boundary outcome class."""


class SparseCellWarning(UserWarning):
    """Contingency cell with expected count below 5."""
