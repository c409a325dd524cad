"""The twelve acceptance criteria, each at its stated tolerance and time limit.

Every test prints (and records for the terminal summary) one line
``criterion <k> PASS|FAIL: <detail>`` before asserting.
"""

import io
import json
import math
import random
import time
from fractions import Fraction

from conftest import ACCEPTANCE_LINES
from oracles import argmax_term, log_coeff_i0, partition_counts

from deltawv._numeric import geometric_grid
from deltawv.cli import run
from deltawv.difference_eq import (
    growth_fit,
    newton_polygon,
    parse_equation,
    verify_regular_growth,
)
from deltawv.series_core import builtin, delta_exact, evaluate, polynomial
from deltawv.stirling import (
    build_table,
    check_cross_recurrence,
    check_generating_identity,
    expansion,
)
from deltawv.verifier import (
    gamma_counterexample,
    verify_expansion,
    verify_first_difference,
    verify_wv_difference,
)
from deltawv.wiman_valiron import (
    central_index,
    check_pointwise_bounds,
    order_from_central_index,
)

I0 = "bessel_i0_sqrt"


def report(k: int, ok: bool, detail: str, elapsed: float, limit: float):
    ok = bool(ok) and elapsed < limit
    line = f"criterion {k} {'PASS' if ok else 'FAIL'}: {detail} ({elapsed:.1f}s, limit {limit:.0f}s)"
    print(line)
    ACCEPTANCE_LINES.append(line)
    assert ok, line


def test_criterion_01_stirling_exactness():
    t0 = time.perf_counter()
    table = build_table(30)
    cross = all(
        check_cross_recurrence(table, n, m, r) for n in range(31) for m in range(n + 1) for r in range(m + 1)
    )
    enum = all(table.row(n) == partition_counts(n) for n in range(1, 13))
    report(1, cross and enum, f"cross-recurrence n<=30 {cross}, enumeration n<=12 {enum}", time.perf_counter() - t0, 10)


def test_criterion_02_generating_identity():
    t0 = time.perf_counter()
    table = build_table(20)
    ok = all(check_generating_identity(table, n, x) for n in range(21) for x in range(-5, 6))
    report(2, ok, "x^n = sum S(n,m) x^(m falling) for n<=20, |x|<=5", time.perf_counter() - t0, 1)


def test_criterion_03_polynomial_exactness():
    t0 = time.perf_counter()
    rng = random.Random(20261015)

    def q():
        return Fraction(rng.randint(-40, 40), rng.randint(1, 12))

    checked = mismatches = 0
    for _ in range(100):
        deg = rng.randint(0, 8)
        coeffs = [q() for _ in range(deg)] + [Fraction(rng.choice([-1, 1]) * rng.randint(1, 9), rng.randint(1, 5))]
        f = polynomial(coeffs)
        eta = q() or Fraction(1)
        z = q()
        fz = evaluate(f, z).value
        if fz == 0:
            z += 1
            fz = evaluate(f, z).value
        for n in range(1, 5):
            N = max(n, deg) + rng.randint(0, 3)
            checked += 1
            if expansion(f, n, N, eta, z) * fz != delta_exact(f, n, eta, z).value:
                mismatches += 1
    report(3, mismatches == 0, f"{checked} exact comparisons, {mismatches} mismatches", time.perf_counter() - t0, 30)


def test_criterion_04_gamma_counterexample():
    t0 = time.perf_counter()
    rows = gamma_counterexample([2, 10, 50], prec=256)
    diffs = [float(r.abs_diff) for r in rows]
    ident = all(d < 1e-30 for d in diffs) and all(r.match for r in rows)
    band = all(r.violates_band for r in rows)
    detail = f"max |dPhi/Phi - (1/z-1)| = {max(diffs):.1e}, outside nu/r band at all z: {band}"
    report(4, ident and band, detail, time.perf_counter() - t0, 10)


def test_criterion_05_first_difference_decay():
    t0 = time.perf_counter()
    grid = geometric_grid(1e2, 1e6, 9)
    parts, ok = [], True
    for N in (1, 2, 3):
        rep = verify_first_difference(builtin(I0), N, 1, grid, 0.05, 512)
        target = (N + 1) * -0.5
        good = rep.fitted_slope is not None and abs(rep.fitted_slope - target) <= 0.1 and rep.all_within_bound
        ok &= good
        parts.append(f"N={N} slope {rep.fitted_slope:.3f} vs {target}")
    report(5, ok, "; ".join(parts), time.perf_counter() - t0, 300)


def test_criterion_06_higher_difference_decay():
    t0 = time.perf_counter()
    parts, ok = [], True
    for n, N in ((2, 2), (2, 4), (3, 3)):
        rep = verify_expansion(builtin(I0), n, N, 1, geometric_grid(1e2, 1e6, 9), 0.1, 512)
        target = (N + 1) * -0.5
        good = rep.fitted_slope is not None and rep.fitted_slope <= target + 0.1
        ok &= good and "claimed_exponent_full" in rep.to_dict()
        parts.append(f"(n,N)=({n},{N}) slope {rep.fitted_slope:.3f}, conservative {target}, full {rep.claimed_exponent_full}")
    report(6, ok, "; ".join(parts), time.perf_counter() - t0, 600)


def test_criterion_07_pointwise_bounds():
    t0 = time.perf_counter()
    grid = geometric_grid(1e2, 1e6, 9)
    total = passed = excluded = 0
    for name in (I0, "cos_sqrt"):
        for k in (1, 2, 3):
            for row in check_pointwise_bounds(builtin(name), k, 0.1, grid):
                if row.status == "excluded":
                    excluded += 1
                    continue
                total += 1
                passed += bool(row.passed)
    report(7, total > 0 and passed == total, f"{passed}/{total} rows pass, {excluded} excluded", time.perf_counter() - t0, 120)


def test_criterion_08_central_index():
    t0 = time.perf_counter()
    f = builtin(I0)
    brute = {r: (central_index(f, r), argmax_term(log_coeff_i0, r, 4 * round(math.sqrt(r)) + 10)) for r in (1e2, 1e4, 1e6, 1e8)}
    match = all(a == b for a, b in brute.values())
    sigma = order_from_central_index(f, geometric_grid(1e2, 1e8, 9))
    rng = random.Random(8)
    radii = sorted(10 ** rng.uniform(0, 8) for _ in range(50))
    nus = [central_index(f, r) for r in radii]
    mono = nus == sorted(nus)
    ok = match and abs(sigma - 0.5) <= 0.02 and mono
    detail = f"brute force {match}, order {sigma:.4f}, monotone over 50 radii {mono}"
    report(8, ok, detail, time.perf_counter() - t0, 60)


def test_criterion_09_wv_difference():
    t0 = time.perf_counter()
    grid = geometric_grid(1e3, 1e7, 9)
    parts, ok = [], True
    for k in (1, 2, 3):
        rep = verify_wv_difference(builtin(I0), k, grid, 0.05)
        ok &= rep.passed
        worst = max(float(row.rel_err) / float(row.bound) for row in rep.rows)
        parts.append(f"k={k} worst rel_err/bound {worst:.2f}")
    report(9, ok, "; ".join(parts), time.perf_counter() - t0, 300)


def test_criterion_10_regular_growth_end_to_end():
    t0 = time.perf_counter()
    parts, ok = [], True
    for data, chi in (({"eta": 1, "coeffs": [[1], [], [0, 1]]}, Fraction(1, 2)),
                      ({"eta": 1, "coeffs": [[1], [], [], [0, 1]]}, Fraction(2, 3))):
        eq = parse_equation(data)
        predicted = newton_polygon(eq).predicted_orders
        rep = verify_regular_growth(eq, r_grid=geometric_grid(1e3, 1e7, 9))
        sol = rep.solution
        good = (
            predicted == (chi,)
            and rep.passed
            and sol.terms >= 500
            and sol.stability <= 1e-20
            and abs(rep.chi_fit - float(chi)) <= 0.03
            and rep.L_spread <= 0.05
            and len(rep.residuals) == 5
            and rep.max_residual <= 1e-15
        )
        ok &= good
        parts.append(
            f"chi={chi}: fit {rep.chi_fit:.4f}, L {rep.L_fit:.4f}, spread {rep.L_spread:.1e}, "
            f"{sol.terms} terms, Miller dev {sol.stability:.0e}, residual {rep.max_residual:.0e}"
        )
    report(10, ok, "; ".join(parts), time.perf_counter() - t0, 600)


def test_criterion_11_known_constants():
    t0 = time.perf_counter()
    a = growth_fit(builtin(I0))
    b = growth_fit(builtin("cos_sqrt"))
    ok = (
        abs(a.chi_fit - 0.5) <= 0.02 and abs(a.L_fit - 2.0) <= 0.05
        and abs(b.chi_fit - 0.5) <= 0.02 and abs(b.L_fit - 1.0) <= 0.05
    )
    detail = f"I0: ({a.chi_fit:.4f}, {a.L_fit:.4f}); cos: ({b.chi_fit:.4f}, {b.L_fit:.4f})"
    report(11, ok, detail, time.perf_counter() - t0, 120)


def test_criterion_12_reproducible_cli(tmp_path):
    t0 = time.perf_counter()
    argv = ["verify-expansion", "--func", I0, "--n", "1", "--N", "1", "--points", "5"]
    outs = []
    for name in ("first.json", "second.json"):
        path = tmp_path / name
        code = run(argv + ["--out", str(path)], io.StringIO(), io.StringIO())
        outs.append((code, path.read_bytes()))
    (c1, a), (c2, b) = outs
    json.loads(a)
    ok = c1 == c2 == 0 and a == b
    report(12, ok, f"two runs, {len(a)} bytes each, identical {a == b}", time.perf_counter() - t0, 600)
