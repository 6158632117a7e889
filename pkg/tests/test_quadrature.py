import math

import pytest
from hypothesis import given
from hypothesis import strategies as st

from ctma.quadrature import (QuadratureError, gauss_legendre, panel_series, quad,
                             quad_from_zero, quad_log_range)


@given(st.floats(-0.95, 3.0))
def test_quad_from_zero_power_singularity(k):
    assert quad_from_zero(lambda x: x ** k, 1.0) == pytest.approx(1.0 / (k + 1.0), rel=1e-9)


def test_quad_log_range():
    assert quad_log_range(lambda x: 1.0 / x, 1e-6, 1e6) == pytest.approx(math.log(1e12), rel=1e-12)


def test_gauss_legendre_exact_for_polynomials():
    assert gauss_legendre(lambda x: x ** 40, 0.0, 1.0) == pytest.approx(1 / 41, rel=1e-13)


def test_quad_raises_instead_of_warning():
    with pytest.raises(QuadratureError) as info:
        quad(lambda x: 1.0 / x, 0.0, 1.0, what="log blow-up")
    assert "log blow-up" in str(info.value)
    assert "value" in info.value.partial


def test_panel_series_geometric_converges():
    res = panel_series(lambda k: 0.5 ** k)
    assert res.converged
    assert res.value == pytest.approx(2.0, abs=1e-9)


def test_panel_series_harmonic_diverges():
    assert not panel_series(lambda k: 1.0).converged
    assert not panel_series(lambda k: 1.0 / (k + 1), max_panels=200).converged


def test_panel_series_zero_tail():
    res = panel_series(lambda k: 1.0 if k < 3 else 0.0)
    assert res.converged and res.value == 3.0
