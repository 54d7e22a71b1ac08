"""Average discrete-change marginal effects of dummy regressors.

For a column belonging to variable ``v``, each observation is evaluated twice:
once with that dummy set to 1 and its sibling dummies (other selected
categories of ``v``) set to 0, and once with all of ``v``'s dummies set to 0,
i.e. the reference group. The effect is the sample average of the difference
in class probabilities. Zeroing siblings keeps each counterfactual row a
valid category assignment.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .ologit import OrderedLogitFit, OrderedLogitParams, class_probabilities
from .schema import DesignMatrix


def _params(model) -> OrderedLogitParams:
    return model.params if isinstance(model, OrderedLogitFit) else model


def average_marginal_effect(model, design: DesignMatrix, column, weights=None) -> np.ndarray:
    """J-vector of average changes in class probabilities.

    ``model`` is a fit or bare parameters; ``column`` is an index, a
    ``(variable, category)`` pair or ``"variable:category"``. Optional
    ``weights`` are frequency weights per design row.
    """
    params = _params(model)
    k = design.column_index(column)
    siblings = design.siblings(k)
    X0 = np.array(design.X)
    X0[:, siblings] = 0.0
    X1 = X0.copy()
    X1[:, k] = 1.0
    diff = class_probabilities(X1, params) - class_probabilities(X0, params)
    if design.n_obs == 0:
        return np.zeros(params.n_classes)
    if weights is None:
        return diff.mean(axis=0)
    w = np.asarray(weights, dtype=float)
    return (w @ diff) / w.sum()


@dataclass(frozen=True)
class MarginalEffectsTable:
    labels: tuple[tuple[str, str], ...]
    classes: tuple[str, ...]
    effects: np.ndarray  # K x J

    @property
    def row_sums(self) -> np.ndarray:
        return self.effects.sum(axis=1)

    def rows(self):
        for (variable, category), eff in zip(self.labels, self.effects):
            yield variable, category, eff


def margins_table(model, design: DesignMatrix, classes=None, weights=None) -> MarginalEffectsTable:
    params = _params(model)
    J = params.n_classes
    effects = np.zeros((design.n_columns, J))
    for k in range(design.n_columns):
        effects[k] = average_marginal_effect(params, design, k, weights)
    classes = tuple(classes) if classes is not None else tuple(f"class {j}" for j in range(J))
    return MarginalEffectsTable(design.labels, classes, effects)
