import math

import pytest
from hypothesis import given
from hypothesis import strategies as st

from adx import DimPair, ParameterError, adams_constant, ball_volume, min_index, sphere_area


def test_beta0_2_4_is_32_pi_squared():
    assert adams_constant(DimPair(2, 4)) == pytest.approx(32 * math.pi**2, rel=1e-12)


def test_beta0_1_2_is_4_pi():
    assert adams_constant(DimPair(1, 2)) == pytest.approx(4 * math.pi, rel=1e-12)


def test_beta0_1_4_matches_moser_constant():
    assert adams_constant(DimPair(1, 4)) == pytest.approx(4 * (2 * math.pi**2) ** (1 / 3), rel=1e-12)


@pytest.mark.parametrize("n", range(2, 11))
def test_moser_consistency(n):
    ref = n * sphere_area(n) ** (1 / (n - 1))
    assert adams_constant(DimPair(1, n)) == pytest.approx(ref, rel=1e-10)


def test_beta0_positive_everywhere():
    for n in range(2, 11):
        for m in range(1, n):
            assert adams_constant(DimPair(m, n)) > 0


def test_m_ge_n_rejected():
    with pytest.raises(ParameterError):
        DimPair(4, 4)
    with pytest.raises(ParameterError):
        DimPair(0, 3)


@pytest.mark.parametrize("m,n,j", [(2, 4, 2), (2, 5, 3), (3, 7, 3), (1, 3, 3)])
def test_min_index_examples(m, n, j):
    assert min_index(DimPair(m, n)) == j


@given(st.integers(2, 12).flatmap(lambda n: st.tuples(st.integers(1, n - 1), st.just(n))))
def test_min_index_bracket(mn):
    m, n = mn
    j = min_index(DimPair(m, n))
    assert j * m >= n and (j - 1) * m < n


def test_sphere_and_ball_closed_forms():
    assert sphere_area(4) == pytest.approx(2 * math.pi**2, rel=1e-14)
    assert ball_volume(4) == pytest.approx(math.pi**2 / 2, rel=1e-14)
    assert sphere_area(2) == pytest.approx(2 * math.pi, rel=1e-14)
    assert sphere_area(3) == pytest.approx(4 * math.pi, rel=1e-14)
