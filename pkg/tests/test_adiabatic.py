import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from ginibre_lab import adiabatic as A
from ginibre_lab.errors import DegenerateSpectrumError, DomainError, InvalidDimensionError
from ginibre_lab.kernels import d_closed


@settings(max_examples=60, deadline=None)
@given(N=st.integers(3, 5000), frac=st.floats(0, 1), r=st.floats(0.01, 2.0))
def test_step_invariants(N, frac, r):
    n = int(frac * (N - 2))
    s = A.transfer_step(n, N, r)
    scale = max(1.0, np.abs(s.matrix).max())
    assert s.lam_plus + s.lam_minus == pytest.approx(np.trace(s.matrix), rel=1e-12)
    assert s.lam_plus * s.lam_minus == pytest.approx(np.linalg.det(s.matrix), rel=1e-9, abs=1e-9 * scale)
    assert s.lam_plus >= s.lam_minus >= 0
    for w, v, expect in [(s.w_plus, s.v_plus, 1), (s.w_minus, s.v_minus, 1),
                         (s.w_plus, s.v_minus, 0), (s.w_minus, s.v_plus, 0)]:
        assert w @ v == pytest.approx(expect, abs=1e-12 * scale)
    assert np.allclose(s.reconstruct(), s.matrix, rtol=1e-12, atol=1e-12 * scale)


def test_first_step_spectrum():
    s = A.transfer_step(0, 100, 0.3)
    assert s.lam_minus == 0.0
    assert s.lam_plus == pytest.approx(100 * 0.09 + 1, rel=1e-15)


def test_step_example_biorthonormal():
    s = A.transfer_step(500, 1000, 0.5)
    V = np.column_stack([s.v_plus, s.v_minus])
    W = np.vstack([s.w_plus, s.w_minus])
    assert np.abs(W @ V - np.eye(2)).max() <= 1e-12


def test_step_errors():
    with pytest.raises(DegenerateSpectrumError):
        A.transfer_step(3, 10, 0.0)
    with pytest.raises(ValueError):
        A.transfer_step(9, 10, 0.5)


@pytest.mark.parametrize("N", [2, 3, 10, 100, 1000, 5000])
@pytest.mark.parametrize("r", [0.1, 0.5, 0.9, 1.3])
def test_exact_product_matches_closed_density(N, r):
    ex = A.exact_product(N, r)
    ref = d_closed(N, r)
    assert ex.log_magnitude == pytest.approx(ref.log_magnitude, abs=1e-10 * max(1.0, abs(ref.log_magnitude)))


def test_exact_product_small_cases():
    # N = 2: one step, entry (2,2) of A_0 is N r^2 + 1
    assert math.exp(A.exact_product(2, 0.7).log_magnitude) == pytest.approx(2 * 0.49 + 1, rel=1e-14)
    # r -> 0: every step multiplies by n + 1
    assert A.exact_product(12, 1e-12).log_magnitude == pytest.approx(math.lgamma(12), rel=1e-12)
    with pytest.raises(InvalidDimensionError):
        A.exact_product(1, 0.5)


@pytest.mark.parametrize("r", [0.3, 0.5, 0.7])
def test_factor_asymptotics(r):
    N = 10000
    fac = A.main_term_factors(N, r)
    asy = A.main_term_asymptotics(N, r)
    for key in fac:
        assert fac[key] == pytest.approx(asy[key], rel=0.05, abs=0.05)
    assert sum(fac.values()) == pytest.approx(asy["total"], rel=1e-3)


def test_main_term_domain():
    with pytest.raises(DomainError):
        A.main_term_factors(100, 1.0)
    with pytest.raises(InvalidDimensionError):
        A.main_term_factors(2, 0.5)


@pytest.mark.parametrize("r", [0.3, 0.5, 0.7])
def test_perturbation_ratio_is_order_one_and_r_independent(r):
    P = A.perturbation_ratio(4096, r)
    assert 0 < P < 2
    assert P == pytest.approx(A.perturbation_ratio(4096, 0.5), abs=0.01)


def test_perturbation_ratio_converges():
    vals = [A.perturbation_ratio(N, 0.5) for N in (1024, 4096, 16384)]
    d1, d2 = vals[0] - vals[1], vals[1] - vals[2]
    assert d1 > 0 and d2 > 0
    # roughly halves when N quadruples
    assert d2 / d1 == pytest.approx(0.5, abs=0.15)
    assert vals[-1] - d2 == pytest.approx(A.jump_series().value, abs=0.005)


@pytest.mark.parametrize("r,tol", [(0.5, 2e-3), (1.5, 2e-3), (0.9, 5e-3)])
def test_lyapunov_exponent(r, tol):
    assert A.lyapunov_exponent(10000, r) == pytest.approx(A.lyapunov_limit(r), abs=tol)


def test_lyapunov_limit_values():
    assert A.lyapunov_limit(0.5) == pytest.approx(-0.75)
    assert A.lyapunov_limit(1.5) == pytest.approx(2 * math.log(1.5))


def test_pair_integrand_properties():
    x = np.linspace(-3, 3, 13)
    for form in A.FORMS:
        vals = A.pair_integrand(x[:, None], x[None, :], form)
        assert np.all(vals > 0)
        # decays as the excursion gets longer
        assert A.pair_integrand(0.0, 2.0, form) < A.pair_integrand(0.0, 1.0, form)
    # the derived integrand carries the boundary factor and the dwell exponent
    a, b = -0.4, 0.9
    dwell = math.sinh(2 * b) - math.sinh(2 * a) + (b - a)
    ref = math.exp(-dwell) / ((1 + math.exp(-2 * a)) * (1 + math.exp(2 * b)))
    assert A.pair_integrand(a, b) == pytest.approx(ref, rel=1e-13)


def test_jump_series_values():
    d = A.jump_series(form="derived")
    assert d.value == pytest.approx(A.SQRT_2PI_OVER_E, abs=0.005)
    assert d.relative_error < 5e-3
    assert A.jump_series_full("derived") == pytest.approx(d.value, abs=2e-3)
    disp = A.jump_series(form="display")
    assert disp.value == pytest.approx(0.582, abs=0.01)
    with pytest.raises(ValueError):
        A.jump_series(form="other")


def test_jump_series_first_term_matches_double_integral():
    d = A.jump_series(K_max=1)
    assert d.value == pytest.approx(1 - d.terms[0])
    assert len(d.terms) == 1


def test_jump_rates_at_turning_point():
    j = A.jump_rates(0.0, 0.5, 1e8)
    assert j.plus_to_minus == pytest.approx(0.5, abs=1e-3)
    assert j.minus_to_plus == pytest.approx(-0.5, abs=1e-3)
    assert j.dwell == pytest.approx(3.0, abs=1e-3)


def test_jump_rates_vanish_far_from_turning_point():
    far = A.jump_rates(50.0, 0.5, math.inf)
    assert abs(far.minus_to_plus) < 1e-3
    assert abs(A.jump_rates(-50.0, 0.5, math.inf).plus_to_minus) < 1e-3


@pytest.mark.parametrize("x", [-1.0, 0.0, 1.0, 2.0])
def test_dwell_density_limit(x):
    assert A.dwell_density_x(x, 0.5, math.inf) == pytest.approx(4 * math.cosh(x) ** 2 - 1, abs=1e-6)
    gaps = [abs(A.dwell_density_x(x, 0.5, N) - (4 * math.cosh(x) ** 2 - 1)) for N in (1e4, 1e6, 1e8)]
    assert gaps[2] < gaps[1] < gaps[0] or gaps[0] < 1e-12


@pytest.mark.parametrize("offset", [-1000, 0, 500])
def test_jump_rates_match_eigenvector_differences(offset):
    # with T_k = (k + 1 - N r^2)/sqrt(N) the closed forms are exact finite differences
    N, r = 10**6, 0.5
    n = int(N * r * r) + offset
    s0, s1 = A.transfer_step(n, N, r), A.transfer_step(n + 1, N, r)
    dT = 1 / math.sqrt(N)
    j = A.jump_rates((n + 2 - N * r * r) / math.sqrt(N), r, N)
    assert j.plus_to_minus == pytest.approx(s1.w_minus @ (s0.v_plus - s1.v_plus) / dT, rel=1e-8)
    assert j.minus_to_plus == pytest.approx(s1.w_plus @ (s0.v_minus - s1.v_minus) / dT, rel=1e-8)
