import math

import mpmath
import pytest

from ordsev.special import chi2_sf, gammainc_lower, gammainc_upper

GRID_DF = [1, 2, 3, 4, 5, 7, 10, 14, 20, 30, 50, 100]
GRID_X = [1e-3, 0.1, 0.5, 1.0, 2.0, 3.84, 5.0, 9.0, 14.0, 20.0, 30.0, 50.0, 80.0, 150.0, 300.0]


def _oracle_sf(x, df):
    with mpmath.workdps(40):
        return mpmath.gammainc(mpmath.mpf(df) / 2, a=mpmath.mpf(x) / 2, regularized=True)


@pytest.mark.parametrize("df", GRID_DF)
def test_chi2_sf_against_mpmath(df):
    for x in GRID_X:
        expected = _oracle_sf(x, df)
        got = chi2_sf(x, df)
        if expected < 1e-300:
            assert got < 1e-290
            continue
        assert abs(got - float(expected)) <= 1e-10 * float(expected), (df, x, got, expected)


@pytest.mark.parametrize("a, x", [(0.5, 0.2), (3.0, 1.0), (7.5, 12.0), (40.0, 39.0), (40.0, 41.5)])
def test_lower_plus_upper_is_one(a, x):
    assert math.isclose(gammainc_lower(a, x) + gammainc_upper(a, x), 1.0, abs_tol=1e-14)
    with mpmath.workdps(40):
        assert math.isclose(gammainc_lower(a, x), float(mpmath.gammainc(a, 0, x, regularized=True)), rel_tol=1e-11)


def test_known_critical_values():
    assert chi2_sf(3.841458820694124, 1) == pytest.approx(0.05, rel=1e-10)
    assert chi2_sf(0.0, 3) == 1.0
    assert chi2_sf(math.inf, 3) == 0.0


def test_monotone_in_statistic():
    values = [chi2_sf(x, 6) for x in [0.5 * i for i in range(1, 80)]]
    assert all(b < a for a, b in zip(values, values[1:]))


def test_invalid_arguments():
    with pytest.raises(ValueError):
        chi2_sf(1.0, 0)
    with pytest.raises(ValueError):
        gammainc_upper(1.0, -1.0)
