import io
import json

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from ordsev.contingency import (
    chi_square_from_dataset,
    chi_square_test,
    expected_counts,
    observed_table,
    pearson_residuals,
)
from ordsev.errors import DataError, SparseCellWarning
from ordsev.schema import ingest_records, parse_schema

# motorcycle-involved vs other crashes by (PDO, Injury, Fatal); second row = totals minus first
VEHICLE_SEVERITY = np.array([[12737, 93013, 1197], [268211, 151646, 6605]])


def _mp_expected(table, r, c):
    rows = [sum(int(v) for v in row) for row in table]
    cols = [sum(int(table[i][j]) for i in range(len(table))) for j in range(len(table[0]))]
    return mpmath.mpf(rows[r]) * cols[c] / sum(rows)


def test_column_totals_match_reported_totals():
    assert VEHICLE_SEVERITY.sum(axis=0).tolist() == [280_948, 244_659, 7_802]


def test_expected_count_motorcycle_injury():
    with mpmath.workdps(30):
        oracle = float(_mp_expected(VEHICLE_SEVERITY.tolist(), 0, 1))
    assert oracle == pytest.approx(49053.43943015585, rel=1e-15)
    assert expected_counts(VEHICLE_SEVERITY)[0, 1] == pytest.approx(oracle, rel=1e-14)


def test_uniform_table_is_independent():
    assert np.array_equal(expected_counts([[1, 1], [1, 1]]), np.ones((2, 2)))
    with pytest.warns(SparseCellWarning):
        res = chi_square_test([[1, 1], [1, 1]])
    assert res.chi_square == 0.0 and res.p_value == 1.0
    assert not pearson_residuals([[3, 6], [5, 10]]).any()


def test_hand_case_2x2():
    res = chi_square_test([[10, 0], [0, 10]])
    assert res.chi_square == pytest.approx(20.0, abs=1e-12)
    assert res.df == 1
    np.testing.assert_allclose(res.expected, 5.0)


def test_vehicle_table_signs_and_significance():
    res = chi_square_test(VEHICLE_SEVERITY, ["Motorcycle", "Other"], ["PDO", "Injury", "Fatal"])
    assert res.residuals[0, 1] > 0  # motorcycles over-represented among injury crashes
    assert res.residuals[0, 0] < 0
    assert res.p_value < 1e-10
    assert res.df == 2
    assert res.chi_square == pytest.approx(np.sum(res.residuals**2), rel=1e-12)


def test_zero_grand_total_and_degenerate_tables():
    with pytest.raises(DataError, match="zero grand total"):
        expected_counts([[0, 0], [0, 0]])
    with pytest.raises(DataError, match="degenerate"):
        chi_square_test([[1, 2, 3]])
    with pytest.raises(DataError, match="zero expected"):
        pearson_residuals([[1, 0], [2, 0]])


def test_sparse_cells_warn():
    with pytest.warns(SparseCellWarning):
        chi_square_test([[1, 2], [3, 40]])


def _dataset():
    tree = {
        "outcome": ["L", "H"],
        "variables": [
            {"name": "A", "categories": ["a0", "a1"], "base": "a0", "selected": []},
            {"name": "B", "categories": ["b0", "b1", "b2"], "base": "b0", "selected": []},
        ],
    }
    rows = "Severity,A,B\nL,a0,b0\nH,a1,b2\nH,a1,b1\nL,a0,b2\nH,a0,b1\n"
    return ingest_records(io.StringIO(rows), parse_schema(json.dumps(tree)))


def test_observed_table_and_transpose():
    ds = _dataset()
    ab, la, lb = observed_table(ds, "A", "B")
    ba, _, _ = observed_table(ds, "B", "A")
    assert ab.sum() == len(ds)
    assert np.array_equal(ab, ba.T)
    assert la == ("a0", "a1") and lb == ("b0", "b1", "b2")
    sev, _, _ = observed_table(ds, "Severity", "A")
    assert sev.tolist() == [[2, 0], [1, 2]]


def test_single_record_table():
    ds = _dataset()
    one = type(ds)(ds.schema, ds.severity[:1], ds.codes[:1])
    counts, _, _ = observed_table(one, "A", "B")
    assert counts.sum() == 1 and np.count_nonzero(counts) == 1


def test_unknown_variable_and_same_variable():
    ds = _dataset()
    with pytest.raises(Exception, match="unknown variable"):
        observed_table(ds, "A", "Zed")
    with pytest.raises(DataError, match="distinct"):
        chi_square_from_dataset(ds, "A", "A")


tables = arrays(np.int64, st.tuples(st.integers(2, 4), st.integers(2, 5)), elements=st.integers(1, 500))


@pytest.mark.filterwarnings("ignore::ordsev.errors.SparseCellWarning")
@settings(max_examples=80, deadline=None)
@given(tables, st.integers(2, 9))
def test_scaling_and_transpose_properties(table, m):
    res = chi_square_test(table)
    np.testing.assert_allclose(res.expected.sum(axis=0), table.sum(axis=0), rtol=1e-9)
    np.testing.assert_allclose(res.expected.sum(axis=1), table.sum(axis=1), rtol=1e-9)
    assert res.cell_frequency_pct.sum() == pytest.approx(100.0, abs=1e-9)
    assert res.chi_square == pytest.approx(np.sum(res.residuals**2), rel=1e-12, abs=1e-12)
    assert 0.0 <= res.p_value <= 1.0

    scaled = chi_square_test(table * m)
    assert scaled.chi_square == pytest.approx(m * res.chi_square, rel=1e-9, abs=1e-9)
    big = np.abs(res.residuals) > 1e-9
    assert np.array_equal(np.sign(scaled.residuals[big]), np.sign(res.residuals[big]))

    tr = chi_square_test(table.T)
    np.testing.assert_allclose(tr.expected, res.expected.T, rtol=1e-12)
    np.testing.assert_allclose(tr.residuals, res.residuals.T, rtol=1e-9, atol=1e-12)
    assert tr.chi_square == pytest.approx(res.chi_square, rel=1e-12, abs=1e-12)
    assert tr.df == res.df
    assert tr.p_value == pytest.approx(res.p_value, rel=1e-9, abs=1e-300)
