import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import random_instance
from ordsev.margins import average_marginal_effect, margins_table
from ordsev.ologit import OrderedLogitParams, class_probabilities
from ordsev.schema import DesignMatrix


def _one_variable_design(n=200, seed=0):
    # variable V with reference plus two selected categories, variable W binary
    rng = np.random.default_rng(seed)
    cat = rng.integers(0, 3, size=n)
    X = np.zeros((n, 3))
    X[cat == 1, 0] = 1
    X[cat == 2, 1] = 1
    X[:, 2] = rng.random(n) < 0.5
    labels = [("V", "v1"), ("V", "v2"), ("W", "w1")]
    return DesignMatrix(X, rng.integers(0, 3, size=n), labels, 3)


def test_row_sums_vanish():
    rng = np.random.default_rng(1)
    design, params = random_instance(rng, n=400, k=6, n_classes=4)
    table = margins_table(params, design)
    assert np.max(np.abs(table.row_sums)) < 1e-12


def test_zero_coefficient_has_zero_effect():
    design = _one_variable_design()
    params = OrderedLogitParams([0.8, 0.0, -0.4], [-0.5, 1.5])
    assert np.max(np.abs(average_marginal_effect(params, design, "V:v2"))) < 1e-15


def test_coefficient_sign_flip_mirrors_classes():
    # symmetric cut-offs: reflecting beta reflects the class axis
    design = DesignMatrix(np.zeros((1, 1)), np.array([0]), [("V", "v1")], 3)
    up = average_marginal_effect(OrderedLogitParams([0.9], [-1.0, 1.0]), design, 0)
    down = average_marginal_effect(OrderedLogitParams([-0.9], [-1.0, 1.0]), design, 0)
    np.testing.assert_allclose(up, down[::-1], atol=1e-15)


def test_coefficient_sign_flip_negates_binary_effect():
    design = DesignMatrix(np.zeros((1, 1)), np.array([0]), [("V", "v1")], 2)
    up = average_marginal_effect(OrderedLogitParams([0.9], [0.0]), design, 0)
    down = average_marginal_effect(OrderedLogitParams([-0.9], [0.0]), design, 0)
    np.testing.assert_allclose(up, -down, atol=1e-15)


def test_single_base_row_matches_closed_form():
    X = np.zeros((1, 3))
    design = DesignMatrix(X, np.array([1]), [("V", "v1"), ("V", "v2"), ("W", "w1")], 3)
    params = OrderedLogitParams([1.2, -0.3, 0.5], [-0.2, 2.0])
    eff = average_marginal_effect(params, design, ("V", "v1"))
    expected = class_probabilities(np.array([1.0, 0.0, 0.0]), params) - class_probabilities(np.zeros(3), params)
    np.testing.assert_allclose(eff, expected, rtol=1e-14)


def test_siblings_are_zeroed():
    design = _one_variable_design()
    params = OrderedLogitParams([1.0, 2.0, 0.3], [-0.5, 1.5])
    eff = average_marginal_effect(params, design, "V:v1")
    X1 = design.X.copy()
    X1[:, :2] = 0
    X0 = X1.copy()
    X1[:, 0] = 1
    manual = (class_probabilities(X1, params) - class_probabilities(X0, params)).mean(axis=0)
    np.testing.assert_allclose(eff, manual, rtol=1e-14)


def test_weights_match_row_replication():
    design = _one_variable_design(n=30)
    params = OrderedLogitParams([1.0, -0.7, 0.3], [-0.5, 1.5])
    w = np.arange(1, 31)
    rep = DesignMatrix(np.repeat(design.X, w, axis=0), np.repeat(design.y, w), design.labels, 3)
    np.testing.assert_allclose(
        average_marginal_effect(params, design, 2, weights=w),
        average_marginal_effect(params, rep, 2),
        rtol=1e-12,
    )


@settings(max_examples=60, deadline=None)
@given(st.floats(0.01, 3.0), st.floats(0.01, 3.0))
def test_extreme_class_effect_monotone_in_coefficient(b1, b2):
    lo, hi = sorted((b1, b2))
    design = _one_variable_design(n=50, seed=3)
    eff_lo = average_marginal_effect(OrderedLogitParams([lo, 0.2, 0.1], [-0.5, 1.5]), design, 0)
    eff_hi = average_marginal_effect(OrderedLogitParams([hi, 0.2, 0.1], [-0.5, 1.5]), design, 0)
    assert eff_hi[-1] >= eff_lo[-1] - 1e-15
    assert eff_hi[0] <= eff_lo[0] + 1e-15
    assert eff_lo[-1] > 0 and eff_lo[0] < 0


def test_empty_design_table():
    design = DesignMatrix(np.zeros((10, 0)), np.zeros(10, dtype=int), [], 3)
    table = margins_table(OrderedLogitParams([], [-1.0, 1.0]), design, ["a", "b", "c"])
    assert table.effects.shape == (0, 3)
    assert list(table.rows()) == []


def test_table_labels_and_classes():
    design = _one_variable_design()
    table = margins_table(OrderedLogitParams([1.0, -0.5, 0.2], [-0.5, 1.5]), design, ["PDO", "Injury", "Fatal"])
    assert table.classes == ("PDO", "Injury", "Fatal")
    assert [(v, c) for v, c, _ in table.rows()] == list(design.labels)


def test_unknown_column():
    design = _one_variable_design()
    with pytest.raises(KeyError, match="unknown design column"):
        average_marginal_effect(OrderedLogitParams([1.0, -0.5, 0.2], [-0.5, 1.5]), design, "V:v9")
