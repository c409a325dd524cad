"""Precision plumbing over gmpy2 (MPFR/MPC).

Every computation in the package runs inside ``workprec(bits)``; gmpy2
contexts are thread-local, so concurrent callers do not interfere.
"""

from __future__ import annotations

import math
import numbers
from fractions import Fraction

import gmpy2
from gmpy2 import mpc, mpfr, mpq

MIN_PREC = 64
DEFAULT_PREC = 256
GUARD_BITS = 32
MAX_PREC = 1 << 17


def workprec(bits):
    """Context manager running gmpy2 arithmetic at ``bits`` of precision."""
    return gmpy2.context(precision=int(bits))


def round_prec(bits):
    """Round a working precision up to a multiple of 64 (bounds memo keys)."""
    return -(-int(bits) // 64) * 64


def check_prec(prec):
    if prec < MIN_PREC:
        raise ValueError(f"precision must be >= {MIN_PREC} bits, got {prec}")


def as_rational(x):
    """Return ``x`` as a Fraction when it is an exact rational, else None.

    Floats are deliberately *not* treated as exact.
    """
    if isinstance(x, bool):
        return None
    if isinstance(x, (int, Fraction)):
        return Fraction(x)
    if isinstance(x, type(mpq())):
        return Fraction(int(x.numerator), int(x.denominator))
    if isinstance(x, type(gmpy2.mpz())):
        return Fraction(int(x))
    return None


def to_number(x):
    """Convert ``x`` to mpfr (real input) or mpc at the current precision."""
    if isinstance(x, type(mpc())):
        if x.imag == 0:
            return mpfr(x.real)
        return mpc(x)
    if isinstance(x, complex):
        if x.imag == 0:
            return mpfr(x.real)
        return mpc(x)
    if isinstance(x, Fraction):
        return mpfr(mpq(x.numerator, x.denominator))
    if isinstance(x, str):
        s = x.strip()
        if "j" in s:
            return to_number(mpc(s if s.startswith("(") else f"({s})"))
        if "/" in s:
            return to_number(Fraction(s))
        return mpfr(s)
    if isinstance(x, (numbers.Real, type(mpfr()), type(mpq()), type(gmpy2.mpz()))):
        return mpfr(x)
    raise TypeError(f"cannot convert {type(x).__name__} to a number")


def to_complex(x):
    v = to_number(x)
    return v if isinstance(v, type(mpc())) else mpc(v, 0)


def is_real(v):
    return isinstance(v, type(mpfr()))


def log2abs(x):
    """float log2|x|; -inf for zero."""
    if isinstance(x, Fraction):
        if x == 0:
            return -math.inf
        return math.log2(abs(x.numerator)) - math.log2(x.denominator)
    a = abs(x)
    if a == 0:
        return -math.inf
    with workprec(64):
        return float(gmpy2.log2(mpfr(a)))


def pow2(e):
    """2**e as mpfr (exact for integer e)."""
    return gmpy2.mul_2exp(mpfr(1), int(e))


def magnitude(x):
    """|x| as mpfr, for mpfr/mpc/Fraction input."""
    if isinstance(x, Fraction):
        return abs(to_number(x))
    return abs(x)


def fnum(x):
    """Lossy float of a real mpfr/Fraction (may overflow to inf)."""
    if isinstance(x, Fraction):
        return float(x)
    return float(x)


def decimal_string(x, digits=30):
    """Decimal string with ``digits`` significant digits, trailing zeros trimmed.

    Integers and exact rationals with terminating expansions come out
    compactly ("-0.9", "1024"); huge or tiny values use scientific form.
    """
    if isinstance(x, bool):
        return "true" if x else "false"
    if isinstance(x, int):
        return str(x)
    if isinstance(x, Fraction):
        if x.denominator == 1:
            return str(x.numerator)
        with workprec(max(64, int(digits * 3.33) + 16)):
            return decimal_string(to_number(x), digits)
    if not isinstance(x, type(mpfr())):
        x = mpfr(x)
    if gmpy2.is_nan(x):
        return "nan"
    if gmpy2.is_infinite(x):
        return "inf" if x > 0 else "-inf"
    if x == 0:
        return "0"
    mant, exp, _ = x.digits(10, digits)
    sign = ""
    if mant.startswith("-"):
        sign, mant = "-", mant[1:]
    mant = mant.rstrip("0") or "0"
    # value = 0.mant * 10**exp
    point = exp
    if -6 < point <= 21:
        if point <= 0:
            body = "0." + "0" * (-point) + mant
        elif point >= len(mant):
            body = mant + "0" * (point - len(mant))
        else:
            body = mant[:point] + "." + mant[point:]
        return sign + body
    e = point - 1
    body = mant[0] + ("." + mant[1:] if len(mant) > 1 else "")
    return f"{sign}{body}e{e:+d}"


def serialize(x, digits=30):
    """JSON-ready form: strings for reals, {re, im} for genuinely complex."""
    if x is None or isinstance(x, (bool, str)):
        return x
    if isinstance(x, int):
        return x
    if isinstance(x, type(mpc())):
        if x.imag == 0:
            return decimal_string(x.real, digits)
        return {"re": decimal_string(x.real, digits), "im": decimal_string(x.imag, digits)}
    if isinstance(x, complex):
        with workprec(64):
            return serialize(mpc(x), digits)
    if isinstance(x, float):
        with workprec(64):
            return decimal_string(mpfr(x), min(digits, 17))
    return decimal_string(x, digits)


def geometric_grid(rmin, rmax, points):
    """``points`` radii spaced geometrically from rmin to rmax.

    Values are rounded to 15 significant digits so decade points come out
    as exact integers (100, 1000, ...); other points are plain floats.
    """
    import numpy as np

    rmin, rmax, points = float(rmin), float(rmax), int(points)
    if not 0 < rmin <= rmax:
        raise ValueError("need 0 < rmin <= rmax")
    if points < 1:
        raise ValueError("points must be >= 1")
    if points == 1:
        raw = [rmin]
    else:
        raw = np.geomspace(rmin, rmax, points)
    out = []
    for x in raw:
        v = float(f"{float(x):.15g}")
        out.append(int(v) if v.is_integer() and abs(v) < 2**63 else v)
    return out


def exact_point(r):
    """A float/int/str radius as an exact Fraction (floats are binary rationals)."""
    if isinstance(r, Fraction):
        return r
    if isinstance(r, str):
        return Fraction(r)
    return Fraction(r)
