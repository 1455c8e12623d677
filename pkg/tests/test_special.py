import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from risdetect.special import gaussian_q, marcum_q1

from oracles import gaussian_q_quad, marcum_q1_ncx2, marcum_q1_quad


@pytest.mark.parametrize("a,b", [(1.0, 1.0), (0.3, 2.7), (5.0, 4.0), (9.9, 10.0), (2.0, 0.1)])
def test_marcum_matches_quadrature(a, b):
    assert marcum_q1(a, b) == pytest.approx(marcum_q1_quad(a, b), abs=1e-10)


def test_marcum_closed_forms():
    assert marcum_q1(0.0, 2.0) == pytest.approx(np.exp(-2.0), abs=1e-15)
    assert marcum_q1(0.0, 2.0) == pytest.approx(0.1353353, abs=1e-7)
    for a in (0.0, 0.5, 3.0, 30.0):
        assert marcum_q1(a, 0.0) == 1.0


def test_marcum_broadcasts():
    a = np.linspace(0, 3, 4)
    out = marcum_q1(a[:, None], a[None, :])
    assert out.shape == (4, 4)
    assert out[1, 2] == pytest.approx(marcum_q1(a[1], a[2]))


def test_marcum_large_arguments_use_stable_branch():
    # a*b above the series limit; compare with the chi-squared survival function
    for a, b in [(1500.0, 1499.0), (2000.0, 2001.5)]:
        assert marcum_q1(a, b) == pytest.approx(marcum_q1_ncx2(a, b), abs=1e-8)


@pytest.mark.parametrize("a,b", [(-1.0, 1.0), (1.0, -0.1), (np.nan, 1.0), (1.0, np.inf)])
def test_marcum_domain_errors(a, b):
    with pytest.raises(ValueError):
        marcum_q1(a, b)


@settings(max_examples=60, deadline=None)
@given(st.floats(0, 12), st.floats(0, 12), st.floats(0.01, 1.0))
def test_marcum_monotone(a, b, d):
    # increasing in a, decreasing in b
    assert marcum_q1(a + d, b) >= marcum_q1(a, b) - 1e-13
    assert marcum_q1(a, b + d) <= marcum_q1(a, b) + 1e-13


def test_gaussian_q():
    assert gaussian_q(0.0) == 0.5
    x = np.linspace(-8, 8, 33)
    np.testing.assert_allclose(gaussian_q(x) + gaussian_q(-x), 1.0, atol=1e-15)
    assert gaussian_q(1.2815516) == pytest.approx(0.1, abs=1e-6)
    for v in (-3.0, 0.7, 5.0, 8.0):
        assert gaussian_q(v) == pytest.approx(gaussian_q_quad(v), rel=1e-12)
