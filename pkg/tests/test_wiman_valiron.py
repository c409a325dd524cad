import math

import mpmath
import pytest
from oracles import argmax_term, i0_sqrt_closed, log_coeff_exp, log_coeff_i0

from deltawv import ValidationError
from deltawv._numeric import geometric_grid
from deltawv.series_core import builtin, polynomial
from deltawv.wiman_valiron import (
    central_index,
    check_pointwise_bounds,
    max_modulus,
    max_modulus_point,
    maximal_term,
    order_from_central_index,
    wv_core_constant,
    wv_profile,
)


def test_maximal_term_examples():
    mu, nu = maximal_term(builtin("exp"), 10)
    assert nu == 10 == argmax_term(log_coeff_exp, 10, 100)
    assert float(mu) == pytest.approx(1e10 / math.factorial(10), rel=1e-30)
    assert maximal_term(builtin("bessel_i0_sqrt"), 100)[1] == 10
    mu, nu = maximal_term(polynomial([1, 2]), 1)
    assert (mu, nu) == (2, 1)


def test_central_index_ties_go_up():
    assert central_index(polynomial([1, 1]), 1) == 1
    assert central_index(builtin("exp"), 1) == 1
    assert central_index(builtin("bessel_i0_sqrt"), 10**4) == 100


@pytest.mark.parametrize("r", [10**2, 10**4, 10**6, 10**8])
def test_central_index_against_brute_force(r):
    expected = round(math.sqrt(r))
    assert central_index(builtin("bessel_i0_sqrt"), r) == argmax_term(log_coeff_i0, r, 4 * expected + 10)


def test_cauchy_maximal_term_agrees_with_scan():
    rg = builtin("recip_gamma")
    for r in (10, 16):
        assert maximal_term(rg, r, method="cauchy")[1] == maximal_term(rg, r, method="scan")[1]
    with pytest.raises(ValueError):
        maximal_term(builtin("bessel_i0_sqrt"), 10, method="cauchy")


def test_max_modulus_examples():
    assert float(max_modulus(builtin("exp"), 2)) == pytest.approx(math.exp(2), rel=1e-30)
    assert float(max_modulus(builtin("bessel_i0_sqrt"), 100)) == pytest.approx(float(i0_sqrt_closed(100)), rel=1e-30)
    M, theta = max_modulus_point(builtin("cos_sqrt"), 4)
    assert float(M) == pytest.approx(math.cosh(2), rel=1e-30)
    assert theta == pytest.approx(math.pi)


def test_circle_scan_finds_negative_axis_maximum():
    # a series without a declared sign pattern goes through the circle scan
    from deltawv.series_core import PowerSeries

    cs = builtin("cos_sqrt")
    plain = PowerSeries("cos_sqrt_plain", lambda c, upto, prec: c.extend(cs.coefficients(upto, prec)[len(c) :]),
                        order_hint=cs.order_hint)
    M, theta = max_modulus_point(plain, 9, circle_samples=16)
    assert float(M) == pytest.approx(math.cosh(3), rel=1e-9)
    assert abs(abs(theta) - math.pi) < 1e-4


def test_mu_below_M_and_nu_monotone():
    for name in ("bessel_i0_sqrt", "exp", "cos_sqrt"):
        prof = wv_profile(builtin(name), geometric_grid(1, 1e3, 7), 128)
        nus = [s.nu for s in prof.samples]
        assert nus == sorted(nus)
        assert all(s.mu <= s.M for s in prof.samples)
        d = prof.to_dict()
        assert set(d) == {"f_name", "samples", "order_fit"}
        assert {"r", "mu", "nu", "M"} <= set(d["samples"][0])


def test_order_from_central_index():
    assert order_from_central_index(builtin("exp"), geometric_grid(1e2, 1e5, 7)) == pytest.approx(1, abs=0.02)
    assert order_from_central_index(builtin("bessel_i0_sqrt"), geometric_grid(1e2, 1e8, 9)) == pytest.approx(
        0.5, abs=0.02
    )
    assert order_from_central_index(polynomial([5]), geometric_grid(1e2, 1e6, 5)) == 0
    with pytest.raises(ValueError):
        order_from_central_index(builtin("exp"), geometric_grid(1, 10, 9))


def test_pointwise_bounds_examples():
    (row,) = check_pointwise_bounds(builtin("bessel_i0_sqrt"), 1, 0.1, [10**4])
    assert row.passed and float(row.lhs) == pytest.approx(0.01, rel=0.01)
    assert float(row.rhs) == pytest.approx((10**4) ** (-0.4), rel=1e-12)
    rows = check_pointwise_bounds(polynomial([1, 2, 3]), 1, 0.1, [1e4, 1e6])
    assert all(r.passed for r in rows)
    z = ((10 + 0.5) * math.pi) ** 2
    (ex,) = check_pointwise_bounds(builtin("cos_sqrt"), 1, 0.1, [z])
    assert ex.status == "excluded" and ex.passed is None
    with pytest.raises(ValidationError):
        check_pointwise_bounds(builtin("exp"), 1, 0.1, [10])


def test_wv_core_constant_stable_across_k():
    fit = wv_core_constant(builtin("bessel_i0_sqrt"), geometric_grid(1e3, 1e6, 7), kmax=4)
    assert 0 < fit.C < 1
    assert max(fit.per_k.values()) / min(fit.per_k.values()) < 10
    # the normalised deviation does not grow along the grid
    for k in range(1, 5):
        devs = [d for _, kk, _, d in fit.rows if kk == k]
        assert devs[-1] <= 2 * devs[0]
    with pytest.raises(ValidationError):
        wv_core_constant(builtin("cos_sqrt"), [10])


def test_large_radius_closed_form_maximal_term():
    # beyond the series radius the FFT route is used; mu must not exceed M
    mu, nu = maximal_term(builtin("recip_gamma"), 50)
    with mpmath.workdps(30):
        assert float(mu) <= float(max(abs(mpmath.rgamma(50 * mpmath.expjpi(t / 64))) for t in range(-64, 65)))
    assert 150 < nu < 400
