import math

import pytest
from hypothesis import given, strategies as st

from ginibre_lab.logscaled import LogScaled

finite = st.floats(min_value=-1e6, max_value=1e6, allow_nan=False).filter(lambda x: abs(x) > 1e-6)


@given(finite, finite)
def test_product_matches_plain_arithmetic(a, b):
    got = (LogScaled.from_value(a) * LogScaled.from_value(b)).value()
    assert got == pytest.approx(a * b, rel=1e-12)


@given(finite, finite)
def test_quotient_matches_plain_arithmetic(a, b):
    got = (LogScaled.from_value(a) / LogScaled.from_value(b)).value()
    assert got == pytest.approx(a / b, rel=1e-12)


@given(st.complex_numbers(min_magnitude=1e-3, max_magnitude=1e3, allow_nan=False, allow_infinity=False))
def test_complex_roundtrip(z):
    assert LogScaled.from_value(z).value() == pytest.approx(z, rel=1e-12)


def test_huge_products_stay_finite():
    # 1000! overflows a double but its log does not
    x = LogScaled(0.0)
    for k in range(1, 1001):
        x = x * k
    assert x.log_magnitude == pytest.approx(math.lgamma(1001), rel=1e-13)
    with pytest.raises(OverflowError):
        x.value()


def test_zero_and_division_by_zero():
    z = LogScaled.from_value(0.0)
    assert z.log_magnitude == -math.inf
    assert z.value() == 0.0
    with pytest.raises(ZeroDivisionError):
        LogScaled(1.0) / z


def test_power_and_sign():
    x = LogScaled.from_value(-2.0)
    assert (x**3).value() == pytest.approx(-8.0)
    assert float(x**2) == pytest.approx(4.0)
    assert x.is_real
