"""Randomised invariants (hypothesis)."""

import math
from fractions import Fraction

from gmpy2 import mpfr
from hypothesis import HealthCheck, assume, given, settings
from hypothesis import strategies as st
from oracles import poly_forward_difference

from deltawv import NeedsMoreTermsError
from deltawv._numeric import workprec
from deltawv.difference_eq import (
    DifferenceEquation,
    NewtonSeriesSolution,
    eval_newton_series,
    newton_polygon,
)
from deltawv.series_core import builtin, delta_exact, deriv, evaluate, polynomial
from deltawv.stirling import (
    build_table,
    check_cross_recurrence,
    check_generating_identity,
    expansion,
)
from deltawv.wiman_valiron import central_index, max_modulus, maximal_term

SLOW = settings(max_examples=25, deadline=None, suppress_health_check=[HealthCheck.too_slow])

rationals = st.fractions(min_value=-20, max_value=20, max_denominator=12)
small_rationals = st.fractions(min_value=-5, max_value=5, max_denominator=6)
polys = st.lists(rationals, min_size=1, max_size=9)
nonzero_eta = small_rationals.filter(lambda q: q != 0)

TABLE = build_table(30)


@given(polys, polys, rationals, rationals, st.integers(1, 5), nonzero_eta, rationals)
def test_delta_is_linear(p, q, alpha, beta, n, eta, z):
    size = max(len(p), len(q))
    p = p + [Fraction(0)] * (size - len(p))
    q = q + [Fraction(0)] * (size - len(q))
    combo = polynomial([alpha * a + beta * b for a, b in zip(p, q)])
    lhs = delta_exact(combo, n, eta, z).value
    rhs = alpha * delta_exact(polynomial(p), n, eta, z).value + beta * delta_exact(polynomial(q), n, eta, z).value
    assert lhs == rhs
    assert lhs == poly_forward_difference([alpha * a + beta * b for a, b in zip(p, q)], n, eta, z)


@given(polys, st.integers(-30, 30), st.integers(1, 4), st.data())
def test_degree_annihilation(p, z, eta, data):
    d = len(p) - 1
    n = data.draw(st.integers(d + 1, d + 4))
    assert delta_exact(polynomial(p), n, eta, z).value == 0


@SLOW
@given(
    st.sampled_from(["exp", "bessel_i0_sqrt", "cos_sqrt"]),
    st.integers(1, 3),
    st.floats(0.5, 60),
    st.sampled_from([1, Fraction(1, 2), Fraction(-3, 2)]),
)
def test_delta_commutes_with_derivative(name, n, z, eta):
    f = builtin(name)
    lhs = delta_exact(deriv(f, 1), n, eta, z, 256).value
    # central difference of Delta^n f at step h, error O(h^2)
    with workprec(320):
        h = mpfr(2) ** -70
        zz = mpfr(z)
        up = delta_exact(f, n, eta, zz + h, 256).value
        dn = delta_exact(f, n, eta, zz - h, 256).value
        fd = (up - dn) / (2 * h)
        scale = max(abs(lhs), abs(evaluate(deriv(f, 1), zz, 256).value) * 2 ** -60, mpfr(2) ** -200)
        assert abs(fd - lhs) <= scale * mpfr(2) ** -80


@SLOW
@given(
    st.sampled_from(["exp", "bessel_i0_sqrt", "cos_sqrt", "recip_gamma"]),
    st.floats(-200, 400),
    st.floats(-30, 30),
    st.sampled_from([64, 128, 256]),
)
def test_evaluation_sound_under_precision_doubling(name, re, im, prec):
    f = builtin(name)
    z = complex(re, im)
    lo = evaluate(f, z, prec)
    hi = evaluate(f, z, 2 * prec)
    with workprec(4 * prec):
        diff = abs(hi.value - lo.value)
        slack = abs(hi.value) * mpfr(2) ** (-prec) + hi.tail_bound
        assert diff <= lo.tail_bound + slack


@SLOW
@given(polys, st.integers(1, 4), st.integers(0, 4), nonzero_eta, rationals)
def test_expansion_exact_for_polynomials(p, n, extra, eta, z):
    f = polynomial(p)
    N = max(n, len(p) - 1) + extra
    fz = evaluate(f, z).value
    delta = delta_exact(f, n, eta, z).value
    if fz == 0:
        return
    assert expansion(f, n, N, eta, z) * fz == delta


@given(st.integers(0, 20), st.integers(-5, 5))
def test_generating_identity(n, x):
    assert check_generating_identity(TABLE, n, x)


@given(st.integers(0, 30), st.data())
def test_cross_recurrence(n, data):
    m = data.draw(st.integers(0, n))
    r = data.draw(st.integers(0, m))
    assert check_cross_recurrence(TABLE, n, m, r)


@SLOW
@given(
    st.sampled_from(["exp", "bessel_i0_sqrt", "cos_sqrt", "recip_gamma"]),
    st.lists(st.floats(0.5, 1e4), min_size=2, max_size=6),
)
def test_central_index_monotone_and_mu_below_M(name, radii):
    f = builtin(name)
    # 1/Gamma has nu ~ r log r, so its FFT grows quickly; keep its radii moderate
    cap = 100 if name == "recip_gamma" else 1e4
    radii = sorted({min(r, cap) for r in radii})
    nus = [central_index(f, r) for r in radii]
    assert nus == sorted(nus)
    r = radii[-1]
    if name != "recip_gamma" or r <= 16:
        mu, _ = maximal_term(f, r)
        assert mu <= max_modulus(f, r)


equations = st.lists(st.lists(st.integers(-3, 3), max_size=4), min_size=2, max_size=6).filter(
    lambda cs: any(cs[-1]) and sum(1 for a in cs if any(a)) >= 2
)


@given(equations, st.lists(st.integers(-3, 3), min_size=1, max_size=3).filter(lambda c: c[-1] != 0))
def test_polygon_orders_rational_and_scale_invariant(coeffs, common):
    eq = DifferenceEquation(tuple(tuple(a) for a in coeffs))
    orders = newton_polygon(eq).predicted_orders
    assert all(0 < c < 1 and c.denominator <= eq.order for c in orders)

    def mul(a):
        if not any(a):
            return ()
        out = [0] * (len(a) + len(common) - 1)
        for i, x in enumerate(a):
            for j, y in enumerate(common):
                out[i + j] += x * y
        return tuple(out)

    scaled = DifferenceEquation(tuple(mul(a) for a in coeffs))
    assert newton_polygon(scaled).predicted_orders == orders


@given(st.lists(st.integers(-50, 50), min_size=1, max_size=30), st.integers(0, 25))
def test_newton_series_exact_at_integers(b, k):
    # C(k, m) vanishes beyond m = k, so the series is a finite integer sum there
    b = b + [0] * 8
    sol = NewtonSeriesSolution(tuple(mpfr(x) for x in b), len(b), "b[0]=1", 256)
    expected = sum(x * math.comb(k, m) for m, x in enumerate(b))
    try:
        got = eval_newton_series(sol, k, 128)
    except NeedsMoreTermsError:
        assume(False)
    assert got.value == expected
