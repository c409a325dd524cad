import json
import math
from fractions import Fraction

import gmpy2
import mpmath
import pytest
from gmpy2 import const_pi, mpfr
from oracles import cos_sqrt_closed, i0_sqrt_closed, i0_sqrt_direct, mp_float

from deltawv import ConfigurationError, NearZeroError, PrecisionExhaustedError
from deltawv._numeric import decimal_string, geometric_grid, serialize, workprec
from deltawv.series_core import (
    builtin,
    cos_sqrt_zeros,
    delta_exact,
    deriv,
    dump_coefficients,
    evaluate,
    load_coefficients,
    log_derivative,
    order_from_coefficients,
    polynomial,
    taylor_remainder_check,
)


def test_builtin_coefficients():
    assert builtin("bessel_i0_sqrt").exact_coeff(2) == Fraction(1, 4)
    assert builtin("cos_sqrt").exact_coeff(1) == Fraction(-1, 2)
    assert builtin("exp").exact_coeff(5) == Fraction(1, 120)
    rg = builtin("recip_gamma")
    assert rg.coeff(0) == 0
    assert abs(float(rg.coeff(1)) - 1) < 1e-70


def test_recip_gamma_coefficients_match_fitted_taylor():
    # oracle: mpmath Taylor coefficients of rgamma at 0
    mpmath.mp.dps = 60
    ref = mpmath.taylor(mpmath.rgamma, 0, 8)
    rg = builtin("recip_gamma")
    for n, c in enumerate(ref):
        assert abs(float(rg.coeff(n, 256)) - float(c)) < 1e-40
    mpmath.mp.dps = 15


def test_unknown_builtin_rejected():
    with pytest.raises(ConfigurationError):
        builtin("sinh")
    with pytest.raises(ConfigurationError):
        builtin("poly:[1,x]")


def test_coefficients_deterministic():
    f = builtin("bessel_i0_sqrt")
    a = [f.coeff(n, 192) for n in range(40)]
    b = [f.coeff(n, 192) for n in range(40)]
    assert a == b


def test_nonneg_flag_matches_coefficients():
    for name in ("bessel_i0_sqrt", "exp"):
        f = builtin(name)
        assert f.nonneg_coeffs
        assert all(c >= 0 for c in f.coefficients(300, 128))
    assert not builtin("cos_sqrt").nonneg_coeffs


@pytest.mark.parametrize("name", ["bessel_i0_sqrt", "cos_sqrt", "exp", "recip_gamma"])
def test_terms_eventually_decrease(name):
    f = builtin(name)
    R = 10
    coeffs = f.coefficients(400, 128)
    with workprec(128):
        terms = [abs(c) * mpfr(R) ** n for n, c in enumerate(coeffs)]
    # block maxima of |a_n| R^n shrink (1/Gamma's coefficients oscillate, so not term by term)
    blocks = [max(terms[i : i + 50]) for i in range(200, 400, 50)]
    assert all(b < a for a, b in zip(blocks, blocks[1:]))
    assert blocks[-1] < blocks[0] * mpfr(10) ** -20


def test_evaluate_polynomial_exact():
    res = evaluate(polynomial([1, 2]), 3)
    assert res.value == 7 and res.tail_bound == 0 and res.exact


def test_evaluate_i0_at_one_against_direct_sum():
    res = evaluate(builtin("bessel_i0_sqrt"), 1, 256)
    ref = i0_sqrt_direct(1, dps=160, terms=60)
    with mpmath.workdps(160):
        assert abs(mpmath.mpf(str(res.value)) - ref) < mpmath.mpf(10) ** -70
    assert mp_float(res.value) == pytest.approx(2.2795853023360673, rel=1e-15)


def test_cos_sqrt_zero_within_tail_bound():
    with workprec(300):
        z = const_pi() ** 2 / 4
        res = evaluate(builtin("cos_sqrt"), z, 256)
        assert abs(res.value) <= res.tail_bound + mpfr(2) ** -250


def test_evaluate_complex_and_large_arguments():
    res = evaluate(builtin("cos_sqrt"), complex(-40, 3), 128)
    ref = complex(cos_sqrt_closed(mpmath.mpc(-40, 3)))
    assert abs(complex(res.value) - ref) < 1e-12 * abs(ref)
    big = evaluate(builtin("bessel_i0_sqrt"), 10**6, 128)
    with mpmath.workdps(60):
        assert abs(mpmath.mpf(str(big.value)) / i0_sqrt_closed(10**6) - 1) < mpmath.mpf(10) ** -30


def test_recip_gamma_closed_form_switch_consistent():
    rg = builtin("recip_gamma")
    a = evaluate(rg, 15.5, 200).value
    b = evaluate(rg, 15.5, 200, series_only=True).value
    with mpmath.workdps(70):
        ref = mpmath.rgamma(15.5)
        assert abs(mpmath.mpf(str(a)) / ref - 1) < mpmath.mpf(10) ** -55
        assert abs(mpmath.mpf(str(b)) / ref - 1) < mpmath.mpf(10) ** -55


def test_deriv_rules():
    d = deriv(polynomial([0, 0, 1]), 1)
    assert d.is_polynomial and tuple(d.polynomial) == (0, 2)
    e3 = deriv(builtin("exp"), 3)
    for n in range(10):
        assert float(e3.coeff(n)) == pytest.approx(1 / math.factorial(n), rel=1e-15)
    assert float(deriv(builtin("bessel_i0_sqrt"), 1).coeff(0)) == 1
    f = builtin("cos_sqrt")
    assert deriv(f, 0) is f


def test_delta_exact_polynomial():
    sq = polynomial([0, 0, 1])
    for z in (Fraction(3, 7), 5, -2):
        assert delta_exact(sq, 1, 1, z).value == 2 * Fraction(z) + 1
        assert delta_exact(sq, 2, 1, z).value == 2
        assert delta_exact(sq, 3, 1, z).value == 0


def test_delta_exact_recip_gamma_identity():
    rg = builtin("recip_gamma")
    d = delta_exact(rg, 1, 1, 10, 256)
    v = evaluate(rg, 10, 256)
    with workprec(300):
        assert abs(d.value / v.value + mpfr("0.9")) < mpfr(10) ** -60


def test_delta_exact_precision_budget(monkeypatch):
    import deltawv.series_core as sc

    # Delta^8 with eta = 2^-200 cancels ~1600 bits; cap the budget at 512
    monkeypatch.setattr(sc, "MAX_PREC", 512)
    with workprec(64):
        eta = mpfr(2) ** -200
    with pytest.raises(PrecisionExhaustedError) as info:
        delta_exact(builtin("exp"), 8, eta, 1, 64)
    assert info.value.required_prec > 512
    monkeypatch.undo()
    res = delta_exact(builtin("exp"), 8, eta, 1, 64)
    with workprec(128):
        assert abs(res.value / (gmpy2.exp(mpfr(1)) * eta**8) - 1) < mpfr(2) ** -50


def test_log_derivative_examples():
    assert float(log_derivative(builtin("exp"), 1, 3.5)) == pytest.approx(1, rel=1e-30)
    ld = log_derivative(builtin("bessel_i0_sqrt"), 1, 10**4)
    assert float(ld) == pytest.approx(0.01, rel=0.01)
    with mpmath.workdps(40):
        x = mpmath.mpf(10**4)
        ref = mpmath.besseli(1, 2 * mpmath.sqrt(x)) / (mpmath.sqrt(x) * mpmath.besseli(0, 2 * mpmath.sqrt(x)))
    assert float(ld) == pytest.approx(float(ref), rel=1e-25)
    assert log_derivative(polynomial([1, 1]), 1, 0) == 1


def test_log_derivative_at_zero_raises():
    with pytest.raises(NearZeroError):
        log_derivative(polynomial([-1, 1]), 1, 1)


def test_order_from_coefficients():
    assert order_from_coefficients(builtin("exp"), 200).sigma == pytest.approx(1.0, abs=0.02)
    assert order_from_coefficients(builtin("bessel_i0_sqrt"), 200).sigma == pytest.approx(0.5, abs=0.02)
    assert order_from_coefficients(polynomial([1, 2, 3]), 16).sigma == 0
    est = order_from_coefficients(builtin("exp"), 200, method="limsup")
    assert 1.0 < est.sigma < 1.3
    with pytest.raises(ValueError):
        order_from_coefficients(builtin("exp"), 8)


@pytest.mark.parametrize("name", ["bessel_i0_sqrt", "cos_sqrt", "exp"])
def test_taylor_remainder_bound(name):
    f = builtin(name)
    for z in (1.5, 20, 300):
        for n in (1, 2, 4):
            rem, bound = taylor_remainder_check(f, n, 1, z, 128)
            assert rem <= bound * (1 + 1e-20)


def test_cos_sqrt_exclusion_policy():
    f = builtin("cos_sqrt")
    zeros = cos_sqrt_zeros(1e4)
    assert zeros[0] == pytest.approx((math.pi / 2) ** 2)
    for zr in zeros[:20]:
        assert f.excluded(zr)
    assert not f.excluded(1.0)
    assert not builtin("bessel_i0_sqrt").excluded(zeros[3])
    excluded = [r for r in geometric_grid(1e2, 1e6, 9) if f.excluded(r)]
    assert len(excluded) <= 2


def test_coefficient_file_roundtrip(tmp_path):
    p = tmp_path / "c.json"
    dump_coefficients([Fraction(1, 3), 2, Fraction(-5, 4)], p)
    data = json.loads(p.read_text())
    assert all(isinstance(x, str) for x in data)
    back = load_coefficients(p)
    f = polynomial(back)
    assert evaluate(f, 2).value == Fraction(1, 3) + 4 - 5
    g = builtin(f"poly:@{p}")
    assert g.is_polynomial


def test_serialization_helpers():
    assert decimal_string(Fraction(-9, 10)) == "-0.9"
    assert serialize(7) == 7
    assert serialize(complex(1, -2)) == {"re": "1", "im": "-2"}
    assert geometric_grid(1e2, 1e6, 9)[0] == 100 and geometric_grid(1e2, 1e6, 9)[-1] == 1000000
