import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from nztsurf.jets import Jet, coefficient, constant, jcos, jsin, jsqrt, value, variable


def test_polynomial_derivatives():
    # f(x) = x^3 - 2x + 5: f'(2) = 10, f''(2) = 12
    x = variable(2.0, 2)
    f = x ** 3 - 2 * x + 5
    assert f.c[0] == pytest.approx(9.0)
    assert f.c[1] == pytest.approx(10.0)
    assert 2 * f.c[2] == pytest.approx(12.0)


def test_division_and_sqrt():
    x = variable(4.0, 2)
    f = 1 / x
    assert f.c[1] == pytest.approx(-1 / 16)
    assert 2 * f.c[2] == pytest.approx(2 / 64)
    g = jsqrt(x)
    assert g.c[0] == pytest.approx(2.0)
    assert g.c[1] == pytest.approx(0.25)
    assert 2 * g.c[2] == pytest.approx(-1 / 32)


def test_trig():
    x = variable(0.3, 3)
    s, c = jsin(x), jcos(x)
    assert s.c[0] == pytest.approx(np.sin(0.3))
    assert s.c[1] == pytest.approx(np.cos(0.3))
    assert 2 * s.c[2] == pytest.approx(-np.sin(0.3))
    assert 6 * s.c[3] == pytest.approx(-np.cos(0.3))
    assert c.c[1] == pytest.approx(-np.sin(0.3))


def test_nested_mixed_partial():
    # g(x, y) = sin(x * y^2); d2g/dxdy at (0.7, 1.3)
    x0, y0 = 0.7, 1.3
    x = variable(constant(x0, 1), 1)      # outer: d/dx
    y = constant(variable(y0, 1), 1)      # inner: d/dy
    g = jsin(x * y * y)
    mixed = coefficient(coefficient(g, 1), 1)
    a = x0 * y0 ** 2
    exact = 2 * y0 * np.cos(a) - x0 * y0 ** 2 * 2 * y0 * np.sin(a)
    assert mixed == pytest.approx(exact, rel=1e-12)


def test_array_coefficients():
    xs = np.linspace(0.5, 2.0, 7)
    x = variable(xs, 2)
    f = x * x * jsqrt(x)
    # f = x^(5/2): f' = 2.5 x^1.5, f'' = 3.75 x^0.5
    np.testing.assert_allclose(f.c[1], 2.5 * xs ** 1.5, rtol=1e-12)
    np.testing.assert_allclose(2 * np.asarray(f.c[2]), 3.75 * xs ** 0.5, rtol=1e-12)


def test_value_extracts_innermost():
    x = variable(constant(1.5, 2), 2)
    assert value(x) == 1.5
    assert value(3.25) == 3.25


@settings(max_examples=50, deadline=None)
@given(a=st.floats(-3, 3), b=st.floats(-3, 3), x0=st.floats(0.2, 2.5))
def test_product_rule(a, b, x0):
    x = variable(x0, 1)
    f = (x * x + a) * (x + b)
    exact = 2 * x0 * (x0 + b) + (x0 * x0 + a)
    assert f.c[1] == pytest.approx(exact, rel=1e-10, abs=1e-10)


@settings(max_examples=50, deadline=None)
@given(x0=st.floats(0.3, 2.0))
def test_chain_rule_sqrt_sin(x0):
    x = variable(x0, 2)
    f = jsqrt(1 + jsin(x) * jsin(x))
    s, c = np.sin(x0), np.cos(x0)
    root = np.sqrt(1 + s * s)
    d1 = s * c / root
    assert f.c[1] == pytest.approx(d1, rel=1e-10)
