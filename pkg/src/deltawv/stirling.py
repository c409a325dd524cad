"""Stirling numbers of the second kind and the truncated difference expansion.

Delta^n f = n! sum_{k>=n} S(k, n) eta^k f^(k) / k!, so dividing by f gives a
series in the logarithmic derivatives f^(k)/f.  This module holds the exact
triangle S(n, m) and evaluates the truncation of that series at order N.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache

from gmpy2 import mpfr, mpq

from ._numeric import (
    DEFAULT_PREC,
    GUARD_BITS,
    as_rational,
    check_prec,
    pow2,
    round_prec,
    to_number,
    workprec,
)
from .series_core import PowerSeries, _log_derivative


@dataclass(frozen=True)
class StirlingTable:
    """Exact triangle S(n, m), 0 <= m <= n <= n_max."""

    n_max: int
    rows: tuple

    def entries(self, n: int, m: int) -> int:
        if not 0 <= n <= self.n_max:
            raise IndexError(f"n={n} outside table (n_max={self.n_max})")
        if m < 0 or m > n:
            return 0
        return self.rows[n][m]

    __call__ = entries

    def row(self, n: int) -> tuple:
        return self.rows[n]

    def bell(self, n: int) -> int:
        """Bell number B_n = sum_m S(n, m)."""
        return sum(self.rows[n])

    def triples(self):
        for n, row in enumerate(self.rows):
            for m, v in enumerate(row):
                yield n, m, v

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["n", "m", "value"])
        for n, m, v in self.triples():
            w.writerow([n, m, v])
        return buf.getvalue()

    def to_json(self) -> str:
        data = {
            "n_max": self.n_max,
            "entries": [{"n": n, "m": m, "value": str(v)} for n, m, v in self.triples()],
        }
        return json.dumps(data, indent=2) + "\n"


@lru_cache(maxsize=16)
def build_table(n_max: int) -> StirlingTable:
    """Build the triangle by S(n, m) = m S(n-1, m) + S(n-1, m-1)."""
    if n_max < 1:
        raise ValueError("n_max must be >= 1")
    rows = [(1,)]
    for n in range(1, n_max + 1):
        prev = rows[-1]
        row = [0] * (n + 1)
        for m in range(1, n + 1):
            left = prev[m] if m < n else 0
            row[m] = m * left + prev[m - 1]
        rows.append(tuple(row))
    return StirlingTable(n_max, tuple(rows))


def _falling(x: int, m: int) -> int:
    out = 1
    for i in range(m):
        out *= x - i
    return out


def check_generating_identity(table: StirlingTable, n: int, x: int) -> bool:
    """x^n == sum_m S(n, m) x (x-1) ... (x-m+1), in exact integers."""
    rhs = sum(table.entries(n, m) * _falling(x, m) for m in range(n + 1))
    return x**n == rhs


def check_cross_recurrence(table: StirlingTable, n: int, m: int, r: int) -> bool:
    """C(m, r) S(n, m) == sum_{k=m-r}^{n-r} C(n, k) S(n-k, r) S(k, m-r)."""
    if not n >= m >= r >= 0:
        raise ValueError("need n >= m >= r >= 0")
    lhs = math.comb(m, r) * table.entries(n, m)
    rhs = sum(
        math.comb(n, k) * table.entries(n - k, r) * table.entries(k, m - r) for k in range(m - r, n - r + 1)
    )
    return lhs == rhs


@dataclass(frozen=True)
class ExpansionCoefficients:
    """Weights n! S(k, n) eta^k / k! for n <= k <= N.

    ``rational`` holds n! S(k, n)/k! exactly; ``weights`` multiplies in eta^k,
    exactly when eta is rational, otherwise at ``prec`` bits.
    """

    n: int
    N: int
    eta: object
    rational: tuple
    weights: tuple

    def weight(self, k: int):
        return self.weights[k - self.n]


def expansion_coefficients(n: int, N: int, eta=1, prec: int = DEFAULT_PREC) -> ExpansionCoefficients:
    if not N >= n >= 1:
        raise ValueError("need N >= n >= 1")
    table = build_table(max(N, 1))
    fact_n = math.factorial(n)
    rational = tuple(Fraction(fact_n * table.entries(k, n), math.factorial(k)) for k in range(n, N + 1))
    er = as_rational(eta)
    if er is not None:
        weights = tuple(w * er**k for w, k in zip(rational, range(n, N + 1)))
    else:
        with workprec(prec):
            e = to_number(eta)
            weights = tuple(mpfr(mpq(w.numerator, w.denominator)) * e**k for w, k in zip(rational, range(n, N + 1)))
    return ExpansionCoefficients(n, N, eta, rational, weights)


def _expansion(f: PowerSeries, n: int, N: int, eta, z, prec: int):
    """(value, error bound) of the truncated expansion; exact for rational polynomial data."""
    coeffs = expansion_coefficients(n, N, eta, prec + GUARD_BITS)
    exact = f.is_polynomial and as_rational(eta) is not None and as_rational(z) is not None
    if exact:
        total = Fraction(0)
        for k in range(n, N + 1):
            ld, _ = _log_derivative(f, k, z, prec)
            total += coeffs.weight(k) * ld
        return total, Fraction(0)
    wp = round_prec(prec + GUARD_BITS)
    with workprec(wp):
        total = mpfr(0)
        bound = mpfr(0)
        for k in range(n, N + 1):
            ld, err = _log_derivative(f, k, z, wp)
            w = coeffs.weight(k)
            w = to_number(w) if isinstance(w, Fraction) else w
            total += w * ld
            bound += abs(w) * err
        bound += abs(total) * pow2(-wp) * (N - n + 2)
        return total, bound


def expansion(f: PowerSeries, n: int, N: int, eta, z, prec: int = DEFAULT_PREC):
    """n! sum_{k=n}^N S(k, n) eta^k/k! * f^(k)(z)/f(z).

    Returns a Fraction when f is a polynomial and eta, z are rational.
    """
    check_prec(prec)
    return _expansion(f, n, N, eta, z, prec)[0]


__all__ = [
    "ExpansionCoefficients",
    "StirlingTable",
    "build_table",
    "check_cross_recurrence",
    "check_generating_identity",
    "expansion",
    "expansion_coefficients",
]
