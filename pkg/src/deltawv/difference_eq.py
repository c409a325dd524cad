"""Linear difference equations a_n(z) Delta^n f + ... + a_0(z) f = 0.

* ``newton_polygon`` predicts the rational growth orders chi of solutions
  from the points (k, deg a_k).
* ``binomial_recurrence`` rewrites the equation for the coefficients of a
  Newton series f(z) = sum b_m C(z, m), using Delta C(z, m) = C(z, m-1) and
  z C(z, m) = (m+1) C(z, m+1) + m C(z, m).
* ``solve_minimal`` extracts the subdominant (slowest growing) solution of
  that recurrence by backward recursion.
* ``growth_fit`` fits log M(r) = L r^chi + kappa log r + c.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional, Sequence, Union

import gmpy2
import numpy as np
import sympy
from gmpy2 import mpc, mpfr, mpq
from scipy.optimize import minimize_scalar

from ._numeric import (
    DEFAULT_PREC,
    GUARD_BITS,
    MAX_PREC,
    check_prec,
    geometric_grid,
    log2abs,
    pow2,
    round_prec,
    serialize,
    to_number,
    workprec,
)
from .errors import (
    ConfigurationError,
    GrowthDataError,
    MinimalSolutionNotFoundError,
    NeedsMoreTermsError,
    PrecisionExhaustedError,
    ValidationError,
)
from .series_core import PowerSeries
from .wiman_valiron import max_modulus_point

# -- equations -----------------------------------------------------------------


def _fraction(x) -> Fraction:
    if isinstance(x, bool):
        raise ConfigurationError(f"malformed rational {x!r}")
    if isinstance(x, (int, Fraction)):
        return Fraction(x)
    if isinstance(x, float):
        return Fraction(repr(x))
    if isinstance(x, str):
        try:
            return Fraction(x.strip())
        except (ValueError, ZeroDivisionError):
            raise ConfigurationError(f"malformed rational {x!r}") from None
    raise ConfigurationError(f"malformed rational {x!r}")


def _trim(poly) -> tuple:
    poly = list(poly)
    while poly and poly[-1] == 0:
        poly.pop()
    return tuple(poly)


@dataclass(frozen=True)
class DifferenceEquation:
    """sum_k a_k(z) Delta^k f(z) = 0 with Delta f(z) = f(z + eta).

    ``coeffs[k]`` is a_k as ascending rational coefficients; () is the zero
    polynomial.
    """

    coeffs: tuple
    eta: object = 1

    def __post_init__(self):
        coeffs = tuple(_trim(_fraction(c) for c in a) for a in self.coeffs)
        object.__setattr__(self, "coeffs", coeffs)
        if not coeffs or not coeffs[-1]:
            raise ValidationError("leading coefficient a_n is the zero polynomial")
        if sum(1 for a in coeffs if a) < 2:
            raise ValidationError("need at least two nonzero coefficients")

    @property
    def order(self) -> int:
        return len(self.coeffs) - 1

    def degree(self, k: int) -> Optional[int]:
        a = self.coeffs[k]
        return len(a) - 1 if a else None

    def a(self, k: int, z):
        """a_k(z) by Horner (exact for rational z)."""
        acc = 0
        for c in reversed(self.coeffs[k]):
            acc = acc * z + (to_number(c) if not isinstance(z, (int, Fraction)) else c)
        return acc

    def to_dict(self) -> dict:
        return {"eta": serialize(self.eta), "coeffs": [[str(c) for c in a] for a in self.coeffs]}

    def describe(self) -> str:
        z = sympy.Symbol("z")
        terms = []
        for k, a in enumerate(self.coeffs):
            if not a:
                continue
            poly = sum(sympy.Rational(c.numerator, c.denominator) * z**i for i, c in enumerate(a))
            op = "f" if k == 0 else ("Δf" if k == 1 else f"Δ^{k}f")
            terms.append(f"({sympy.sstr(poly)})·{op}")
        return " + ".join(terms) + " = 0"


def parse_equation(source: Union[str, dict]) -> DifferenceEquation:
    """Build an equation from JSON text (or an already parsed dict).

    Format: {"eta": 1, "coeffs": [[a_0 coefficients], [a_1 ...], ...]} with
    rationals as numbers or strings such as "-3/4".
    """
    if isinstance(source, (str, bytes)):
        try:
            data = json.loads(source)
        except json.JSONDecodeError as exc:
            raise ConfigurationError(f"equation is not valid JSON: {exc}") from None
    else:
        data = source
    if not isinstance(data, dict) or "coeffs" not in data:
        raise ConfigurationError('equation must be an object with a "coeffs" list')
    coeffs = data["coeffs"]
    if not isinstance(coeffs, list) or not all(isinstance(a, list) for a in coeffs):
        raise ConfigurationError('"coeffs" must be a list of coefficient lists')
    eta = data.get("eta", 1)
    if isinstance(eta, list):
        eta = complex(float(_fraction(eta[0])), float(_fraction(eta[1])))
    elif not isinstance(eta, complex):
        eta = _fraction(eta)
        if eta.denominator == 1:
            eta = int(eta)
    if eta == 0:
        raise ValidationError("eta must be nonzero")
    return DifferenceEquation(tuple(tuple(_fraction(c) for c in a) for a in coeffs), eta)


def load_equation(path) -> DifferenceEquation:
    try:
        with open(path) as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigurationError(f"cannot read equation file: {exc}") from None
    return parse_equation(text)


# -- Newton polygon ------------------------------------------------------------


@dataclass(frozen=True)
class HullSegment:
    slope: Fraction
    start: tuple
    end: tuple


@dataclass(frozen=True)
class NewtonPolygon:
    """Upper convex hull of the points (k, deg a_k).

    Balancing a_k(z)(nu/z)^k ~ r^(d_k + k(chi - 1)) between two dominant
    terms gives chi = 1 - s for the hull slope s; only s in (0, 1) yields an
    order strictly between 0 and 1.
    """

    points: tuple
    segments: tuple
    predicted_orders: tuple

    def to_dict(self) -> dict:
        return {
            "points": [list(p) for p in self.points],
            "segments": [
                {"slope": str(s.slope), "from": list(s.start), "to": list(s.end)} for s in self.segments
            ],
            "predicted_orders": [str(c) for c in self.predicted_orders],
        }


def newton_polygon(eq: DifferenceEquation) -> NewtonPolygon:
    pts = [(k, eq.degree(k)) for k in range(eq.order + 1) if eq.coeffs[k]]
    hull: list = []
    for p in pts:
        # pop while the last turn is not strictly clockwise (keeps the upper hull)
        while len(hull) >= 2:
            (x1, y1), (x2, y2) = hull[-2], hull[-1]
            cross = (x2 - x1) * (p[1] - y1) - (y2 - y1) * (p[0] - x1)
            if cross >= 0:
                hull.pop()
            else:
                break
        hull.append(p)
    segments = []
    for (x1, y1), (x2, y2) in zip(hull, hull[1:]):
        segments.append(HullSegment(Fraction(y2 - y1, x2 - x1), (x1, y1), (x2, y2)))
    orders = tuple(1 - s.slope for s in segments if 0 < s.slope < 1)
    return NewtonPolygon(tuple(pts), tuple(segments), orders)


# -- binomial-basis recurrence -------------------------------------------------


def _horner(poly: Sequence[Fraction], m):
    acc = 0
    for c in reversed(poly):
        acc = acc * m + c
    return acc


@dataclass(frozen=True)
class BinomialRecurrence:
    """sum_{j=0}^{L} P_j(m) b_{m+j} = 0 for every m >= start (b_i = 0 for i < 0).

    ``polys[j]`` holds P_j as ascending rational coefficients.  Rows with
    start <= m < 0 only involve b_0, b_1, ... and act as boundary conditions.
    """

    polys: tuple
    start: int

    @property
    def order(self) -> int:
        return len(self.polys) - 1

    def coeff(self, j: int, m: int) -> Fraction:
        return _horner(self.polys[j], Fraction(m))

    def row(self, m: int) -> list:
        return [_horner(p, m) for p in self.polys]

    def residual(self, b: Sequence, m: int):
        acc = 0
        for j, p in enumerate(self.polys):
            idx = m + j
            if 0 <= idx < len(b):
                acc += _horner(p, m) * b[idx]
        return acc

    def describe(self) -> str:
        m = sympy.Symbol("m")
        parts = []
        for j, p in enumerate(self.polys):
            if not p:
                continue
            expr = sympy.factor(sum(sympy.Rational(c.numerator, c.denominator) * m**i for i, c in enumerate(p)))
            idx = "b[m]" if j == 0 else f"b[m+{j}]"
            parts.append(f"({sympy.sstr(expr)})*{idx}")
        return " + ".join(parts) + f" = 0  (m >= {self.start})"

    def to_dict(self) -> dict:
        return {
            "start": self.start,
            "polys": [[str(c) for c in p] for p in self.polys],
            "text": self.describe(),
        }


def binomial_recurrence(eq: DifferenceEquation) -> BinomialRecurrence:
    """Coefficient recurrence of a Newton-series solution (eta = 1 only)."""
    if eq.eta != 1:
        raise ValidationError("the binomial-basis solver needs eta = 1 (rescale z -> eta z first)")
    m = sympy.Symbol("m")
    total: dict = {}
    for k, a in enumerate(eq.coeffs):
        for d, c in enumerate(a):
            if c == 0:
                continue
            # Delta^k: coefficient of C(z, m) is b_{m+k}
            ops = {k: sympy.Integer(1)}
            for _ in range(d):
                new: dict = {}
                for s, q in ops.items():
                    new[s - 1] = new.get(s - 1, 0) + m * q.subs(m, m - 1)
                    new[s] = new.get(s, 0) + m * q
                ops = new
            coef = sympy.Rational(c.numerator, c.denominator)
            for s, q in ops.items():
                total[s] = total.get(s, 0) + coef * q
    total = {s: sympy.expand(q) for s, q in total.items()}
    total = {s: q for s, q in total.items() if q != 0}
    if not total:
        raise ValidationError("equation collapses to 0 = 0 in the binomial basis")
    s_min, s_max = min(total), max(total)
    polys = []
    for j in range(s_max - s_min + 1):
        q = total.get(j + s_min, sympy.Integer(0))
        # P_j(m') = Q_{j+s_min}(m' - s_min)
        q = sympy.expand(q.subs(m, m - s_min)) if s_min else q
        coeffs = sympy.Poly(q, m).all_coeffs()[::-1] if q != 0 else []
        polys.append(_trim(Fraction(int(sympy.fraction(c)[0]), int(sympy.fraction(c)[1])) for c in coeffs))
    return BinomialRecurrence(tuple(polys), s_min)


# -- minimal solution ----------------------------------------------------------


@dataclass(frozen=True)
class NewtonSeriesSolution:
    """f(z) = sum_{m < terms} b_m C(z, m).

    ``dimension`` is the dimension of the subdominant solution space that
    was extracted and ``free_indices`` the indices fixed by the
    normalisation (b at the first one is 1, at the others 0).
    """

    b: tuple
    terms: int
    normalization: str
    prec: int
    dimension: int = 1
    free_indices: tuple = ()
    stability: Optional[float] = None
    margin: int = 0
    recurrence: Optional[BinomialRecurrence] = None

    @property
    def alternating(self) -> bool:
        """(-1)^m b_m has one sign (then |f(-r)| = M(r))."""
        signs = {(gmpy2.sign(x) * (-1) ** m) for m, x in enumerate(self.b) if x != 0}
        return len(signs) == 1

    def to_dict(self, digits: int = 30, head: int = 10) -> dict:
        return {
            "terms": self.terms,
            "normalization": self.normalization,
            "prec": self.prec,
            "dimension": self.dimension,
            "free_indices": list(self.free_indices),
            "stability": None if self.stability is None else serialize(self.stability, digits),
            "margin": self.margin,
            "b_head": [serialize(x, digits) for x in self.b[:head]],
        }


def _mp_poly(poly, wp):
    with workprec(wp):
        return [mpfr(mpq(c.numerator, c.denominator)) for c in poly]


def _eval_mp(poly_mp, m):
    acc = mpfr(0)
    for c in reversed(poly_mp):
        acc = acc * m + c
    return acc


def _forward_solve(rec: BinomialRecurrence, terms: int, wp: int) -> NewtonSeriesSolution:
    P0, P1 = rec.polys
    singular = [m for m in range(0, terms) if _horner(P1, m) == 0]
    i0 = singular[-1] + 1 if singular else 0
    with workprec(wp):
        p0, p1 = _mp_poly(P0, wp), _mp_poly(P1, wp)
        b = [mpfr(0)] * i0 + [mpfr(1)]
        for m in range(i0, terms - 1):
            b.append(-_eval_mp(p0, m) * b[m] / _eval_mp(p1, m))
    for m in range(rec.start, i0):
        if rec.residual(b, m) != 0:
            raise MinimalSolutionNotFoundError("first-order recurrence: boundary rows not satisfiable")
    return NewtonSeriesSolution(tuple(b), terms, f"b[{i0}]=1", wp, 1, (i0,), 0.0, 0, rec)


def _backward(rec, polys_mp, top: int, trial: Sequence, wp: int) -> list:
    L = rec.order
    with workprec(wp):
        b = [mpfr(0)] * top + [mpfr(t) for t in trial]
        for m in range(top - 1, -1, -1):
            acc = mpfr(0)
            for j in range(1, L + 1):
                pj = polys_mp[j]
                if pj:
                    acc += _eval_mp(pj, m) * b[m + j]
            p0 = _eval_mp(polys_mp[0], m)
            if p0 == 0:
                raise ValidationError(f"recurrence has a singular trailing coefficient at m={m}")
            b[m] = -acc / p0
        # keep magnitudes moderate for the combination step
        scale = max(abs(x) for x in b)
        if scale != 0:
            b = [x / scale for x in b]
        return b


def _solve_square(A, y, wp):
    """Gaussian elimination with partial pivoting in mpfr."""
    n = len(A)
    with workprec(wp):
        M = [list(map(mpfr, row)) + [mpfr(v)] for row, v in zip(A, y)]
        for col in range(n):
            piv = max(range(col, n), key=lambda i: abs(M[i][col]))
            if M[piv][col] == 0:
                return None
            M[col], M[piv] = M[piv], M[col]
            for i in range(col + 1, n):
                fac = M[i][col] / M[col][col]
                for k in range(col, n + 1):
                    M[i][k] -= fac * M[col][k]
        x = [mpfr(0)] * n
        for i in range(n - 1, -1, -1):
            s = M[i][n] - sum(M[i][k] * x[k] for k in range(i + 1, n))
            x[i] = s / M[i][i]
        return x


def _combine(rec, sols, terms, d, wp):
    """Normalised combination of d backward solutions, or None."""
    with workprec(wp):
        thresh = pow2(-wp // 2)
        # boundary rows start <= m < 0
        cons = []
        for m in range(rec.start, 0):
            row = []
            for s in sols:
                acc = mpfr(0)
                for j, p in enumerate(rec.polys):
                    if 0 <= m + j < len(s):
                        acc += mpfr(mpq(_horner(p, m).numerator, _horner(p, m).denominator)) * s[m + j]
                row.append(acc)
            if max(abs(v) for v in row) > thresh:
                cons.append(row)
        n_free = d - len(cons)
        if n_free < 1:
            return None
        # greedy choice of free indices: columns that raise the rank
        basis: list = []
        free = []
        for i in range(terms):
            v = [s[i] for s in sols]
            for q in basis:
                dot = sum(a * b for a, b in zip(v, q))
                v = [a - dot * b for a, b in zip(v, q)]
            nrm = gmpy2.sqrt(sum(a * a for a in v))
            if nrm > thresh:
                basis.append([a / nrm for a in v])
                free.append(i)
                if len(free) == n_free:
                    break
        if len(free) < n_free:
            return None
        A = [[s[i] for s in sols] for i in free] + cons
        y = [1] + [0] * (len(A) - 1)
        alpha = _solve_square(A, y, wp)
        if alpha is None:
            return None
        b = [sum(a * s[m] for a, s in zip(alpha, sols)) for m in range(terms)]
        big = max(abs(x) for x in b)
        for m in range(free[0]):
            if abs(b[m]) <= thresh * big:
                b[m] = mpfr(0)
        b[free[0]] = mpfr(1)
        for i in free[1:]:
            b[i] = mpfr(0)
        return b, tuple(free)


def _deviation(b1, b2, upto, L, wp) -> float:
    """max_m |b1_m - b2_m| / max |b2_{m..m+L}| over m < upto."""
    with workprec(wp):
        worst = mpfr(0)
        for m in range(upto):
            env = max(abs(x) for x in b2[m : m + L + 1])
            diff = abs(b1[m] - b2[m])
            if diff == 0:
                continue
            if env == 0:
                return math.inf
            worst = max(worst, diff / env)
        return float(worst)


def solve_minimal(
    rec: BinomialRecurrence,
    terms: int,
    start_margin: Optional[int] = None,
    prec: int = DEFAULT_PREC,
    *,
    dimension: Optional[int] = None,
    tol: float = 1e-20,
) -> NewtonSeriesSolution:
    """Subdominant solution by backward (Miller) recursion.

    d trial tails are run backward from ``terms + margin``; their
    combination is normalised at the first d free indices.  The smallest
    d (below the recurrence order) whose result agrees to ``tol`` between
    margins M and 2M is accepted.  First-order recurrences are solved
    forward.
    """
    check_prec(prec)
    if terms < 2:
        raise ValueError("terms must be >= 2")
    L = rec.order
    wp = round_prec(prec + GUARD_BITS)
    if L < 1:
        raise ValidationError("recurrence has order 0")
    if L == 1:
        return _forward_solve(rec, terms, wp)
    if start_margin is None:
        start_margin = max(33, terms // 10) | 1
    polys_mp = [_mp_poly(p, wp) for p in rec.polys]
    dims = [dimension] if dimension is not None else list(range(1, L))
    best_dev = None
    for d in dims:
        if not 1 <= d < L:
            raise ValueError(f"dimension must lie in [1, {L - 1}]")
        results = []
        for margin in (start_margin, 2 * start_margin):
            top = terms + margin
            sols = [_backward(rec, polys_mp, top, [1 if j == t else 0 for j in range(L)], wp) for t in range(d)]
            results.append(_combine(rec, sols, top, d, wp))
        if results[0] is None or results[1] is None:
            continue
        (b1, free1), (b2, free2) = results
        if free1 != free2:
            continue
        dev = _deviation(b1[:terms], b2[:terms], terms // 2, L, wp)
        best_dev = dev if best_dev is None else min(best_dev, dev)
        if dev <= tol:
            norm = ", ".join([f"b[{free2[0]}]=1"] + [f"b[{i}]=0" for i in free2[1:]])
            return NewtonSeriesSolution(
                tuple(b2[:terms]), terms, norm, wp, d, free2, dev, start_margin, rec
            )
    raise MinimalSolutionNotFoundError(
        f"backward recursion not stable under margin doubling (best deviation {best_dev})"
    )


# -- evaluation ----------------------------------------------------------------


def _newton_sum(b, z, wp: int, target: int):
    """(sum, abs_sum, terms) of sum b_m C(z, m) under the geometric tail rule."""
    with workprec(wp):
        z = to_number(z)
        eps = pow2(-target - 8)
        c = mpfr(1)
        s = mpfr(0)
        absum = mpfr(0)
        streak = 0
        n = len(b)
        for m in range(n):
            t = b[m] * c
            s += t
            at = abs(t)
            absum += at
            c = c * (z - m) / (m + 1)
            if m + 1 < n:
                an = abs(b[m + 1] * c)
                if s != 0 and at <= eps * abs(s) and 2 * an <= at:
                    streak += 1
                    if streak >= 4:
                        return s, absum, m + 1, 2 * an
                else:
                    streak = 0
        raise NeedsMoreTermsError(f"Newton series not converged within {n} terms at z={z}")


@dataclass(frozen=True)
class NewtonEval:
    value: object
    tail_bound: object
    terms_used: int
    abs_sum: object


def eval_newton_series(sol: NewtonSeriesSolution, z, prec: int = DEFAULT_PREC) -> NewtonEval:
    """sum b_m C(z, m) with C(z, m) built by the running product.

    Raises PrecisionExhaustedError (carrying the needed solver precision)
    when cancellation in the sum exceeds what the stored coefficients hold.
    """
    check_prec(prec)
    wp = sol.prec
    s, absum, n, tail = _newton_sum(sol.b, z, wp, prec)
    # an exact zero carries only the absolute bound below
    loss = log2abs(absum) - log2abs(s) if s != 0 else 0
    if wp - loss < prec:
        need = round_prec(prec + loss + 64)
        raise PrecisionExhaustedError(f"Newton series at z={z}: cancellation of {loss:.0f} bits", need)
    with workprec(wp):
        bound = tail + absum * (n + 4) * pow2(-wp)
    return NewtonEval(s, bound, n, absum)


def _golden_max(fn, a, b, iters=40):
    g = (math.sqrt(5) - 1) / 2
    c, d = b - g * (b - a), a + g * (b - a)
    fc, fd = fn(c), fn(d)
    for _ in range(iters):
        if b - a < 1e-10:
            break
        if fc > fd:
            b, d, fd = d, c, fc
            c = b - g * (b - a)
            fc = fn(c)
        else:
            a, c, fc = c, d, fd
            d = a + g * (b - a)
            fd = fn(d)
    return (fc, c) if fc > fd else (fd, d)


def newton_max_modulus(sol: NewtonSeriesSolution, r, circle_samples: int = 32, prec: int = DEFAULT_PREC):
    """(M(r), theta) for a Newton series with real coefficients.

    Alternating coefficients put the maximum at z = -r exactly, because
    |C(z, m)| <= C(r+m-1, m) = |C(-r, m)| on |z| = r.  Otherwise the upper
    half circle is scanned and refined by golden-section search; samples
    whose rounding error could exceed the best value found raise
    PrecisionExhaustedError with the precision that would settle them.
    """
    check_prec(prec)
    wp = sol.prec
    if sol.alternating:
        with workprec(wp):
            return abs(_newton_sum(sol.b, -to_number(r), wp, prec)[0]), math.pi
    half = max(2, circle_samples // 2)
    samples = []

    def at(theta):
        with workprec(wp):
            rr = to_number(r)
            z = mpc(rr * gmpy2.cos(mpfr(theta)), rr * gmpy2.sin(mpfr(theta)))
            s, absum, n, _ = _newton_sum(sol.b, z, wp, prec)
            samples.append((abs(s), absum, n))
            return abs(s)

    vals = [(at(math.pi * i / half), math.pi * i / half) for i in range(half + 1)]
    best, theta = max(vals)
    step = math.pi / half
    _, t = _golden_max(lambda th: float(log2abs(at(th))), theta - step, theta + step)
    with workprec(wp):
        refined = at(t)
        if refined > best:
            best, theta = refined, t
        for value, absum, n in samples:
            err = absum * (n + 4) * pow2(-wp)
            if err > best * pow2(-prec // 2):
                need = round_prec(prec + log2abs(absum) - log2abs(best) + 64)
                raise PrecisionExhaustedError(f"circle scan at r={r} needs more precision", need)
    return best, float(theta)


# -- growth fit ----------------------------------------------------------------


@dataclass(frozen=True)
class GrowthFit:
    """log M(r) = L r^chi + kappa log r + c fitted on the sample grid.

    ``per_decade_L`` averages (log M - kappa log r - c)/r^chi per decade;
    ``per_decade_L_naive`` averages log M / r^chi_naive.  ``chi_naive`` and
    ``L_naive`` come from the plain log log M vs log r regression.
    """

    chi_fit: float
    L_fit: float
    kappa: float
    c: float
    per_decade_L: tuple
    per_decade_L_naive: tuple
    residuals: tuple
    chi_naive: float
    L_naive: float
    r: tuple
    log_M: tuple
    theta: tuple = ()

    @property
    def L_spread(self) -> float:
        vals = [v for _, v in self.per_decade_L]
        return (max(vals) - min(vals)) / abs(self.L_fit) if vals and self.L_fit else math.inf

    def to_dict(self, digits: int = 30) -> dict:
        return {
            "chi_fit": serialize(self.chi_fit, digits),
            "L_fit": serialize(self.L_fit, digits),
            "kappa": serialize(self.kappa, digits),
            "c": serialize(self.c, digits),
            "per_decade_L": [{"decade": d, "L": serialize(v, digits)} for d, v in self.per_decade_L],
            "per_decade_L_naive": [{"decade": d, "L": serialize(v, digits)} for d, v in self.per_decade_L_naive],
            "L_spread": serialize(self.L_spread, digits),
            "chi_naive": serialize(self.chi_naive, digits),
            "L_naive": serialize(self.L_naive, digits),
            "samples": [
                {"r": serialize(r, digits), "log_M": serialize(lm, digits), "residual": serialize(res, digits)}
                for r, lm, res in zip(self.r, self.log_M, self.residuals)
            ],
        }


def _profile(chi, x, y):
    """Weighted LSQ of y = L r^chi + kappa log r + c for fixed chi."""
    rc = np.exp(chi * x)
    A = np.column_stack([rc, x, np.ones_like(x)]) / rc[:, None]
    sol, *_ = np.linalg.lstsq(A, y / rc, rcond=None)
    resid = A @ sol - y / rc
    return float(resid @ resid), sol


def fit_growth_samples(rs: Sequence, log_M: Sequence, theta: Sequence = ()) -> GrowthFit:
    """Fit the completely-regular-growth model to (r, log M(r)) samples."""
    x = np.log(np.array([float(r) for r in rs]))
    y = np.array([float(v) for v in log_M])
    if len(x) < 5:
        raise GrowthDataError("need at least 5 samples")
    order = np.argsort(x)
    x, y = x[order], y[order]
    if np.any(np.diff(y) <= 0) or np.any(y <= 0):
        raise GrowthDataError("log M(r) is not positive and increasing on the grid")
    chi0, _ = np.polyfit(x, np.log(y), 1)
    L_naive = float(np.mean(y / np.exp(chi0 * x)))
    lo, hi = max(1e-3, chi0 - 0.15), chi0 + 0.15
    grid = np.linspace(lo, hi, 301)
    errs = [_profile(c, x, y)[0] for c in grid]
    i = int(np.argmin(errs))
    a, b = grid[max(i - 1, 0)], grid[min(i + 1, len(grid) - 1)]
    res = minimize_scalar(lambda c: _profile(c, x, y)[0], bounds=(a, b), method="bounded", options={"xatol": 1e-12})
    chi = float(res.x)
    _, (L, kappa, c) = _profile(chi, x, y)
    core = (y - kappa * x - c) / np.exp(chi * x)
    resid = (L * np.exp(chi * x) + kappa * x + c - y) / y
    decades = np.floor(x / math.log(10) + 1e-9).astype(int)
    per, per_naive = [], []
    naive_core = y / np.exp(chi0 * x)
    for dec in sorted(set(decades.tolist())):
        mask = decades == dec
        per.append((int(dec), float(np.mean(core[mask]))))
        per_naive.append((int(dec), float(np.mean(naive_core[mask]))))
    rs_sorted = tuple(np.array(list(rs), dtype=object)[order].tolist())
    th = tuple(np.array(list(theta), dtype=float)[order].tolist()) if len(theta) == len(rs) else ()
    return GrowthFit(
        chi, float(L), float(kappa), float(c), tuple(per), tuple(per_naive), tuple(resid.tolist()),
        float(chi0), L_naive, rs_sorted, tuple(y.tolist()), th,
    )


def growth_samples(source, r_grid: Sequence, prec: int = DEFAULT_PREC, circle_samples: Optional[int] = None):
    """(log M(r), theta) for a PowerSeries or Newton-series solution, largest r first."""
    out = {}
    for r in sorted(r_grid, key=float, reverse=True):
        if isinstance(source, NewtonSeriesSolution):
            M, th = newton_max_modulus(source, r, circle_samples or 32, prec)
        elif isinstance(source, PowerSeries):
            M, th = max_modulus_point(source, r, circle_samples or 256, prec)
        else:
            raise TypeError("growth source must be a PowerSeries or NewtonSeriesSolution")
        with workprec(64):
            out[r] = (float(gmpy2.log(to_number(M))), th)
    return [out[r][0] for r in r_grid], [out[r][1] for r in r_grid]


def growth_fit(source, r_grid: Optional[Sequence] = None, prec: int = DEFAULT_PREC) -> GrowthFit:
    """Sample M(r) on ``r_grid`` and fit log M = L r^chi + kappa log r + c."""
    grid = geometric_grid(1e3, 1e7, 9) if r_grid is None else list(r_grid)
    logs, thetas = growth_samples(source, grid, prec)
    return fit_growth_samples(grid, logs, thetas)


# -- end-to-end check ----------------------------------------------------------


def equation_residual(eq: DifferenceEquation, sol: NewtonSeriesSolution, z, prec: int = DEFAULT_PREC):
    """|sum_k a_k(z) Delta^k f(z)| / |f(z)| with f evaluated at z, z+1, ..., z+n."""
    wp = sol.prec
    vals = []
    for j in range(eq.order + 1):
        with workprec(wp):
            zj = to_number(z) + j
        vals.append(eval_newton_series(sol, zj, prec))
    with workprec(wp):
        zz = to_number(z)
        total = 0
        for k in range(eq.order + 1):
            if not eq.coeffs[k]:
                continue
            dk = sum((-1) ** (k - j) * math.comb(k, j) * vals[j].value for j in range(k + 1))
            total += eq.a(k, zz) * dk
        f0 = vals[0].value
        return abs(total) / abs(f0)


def default_terms(chi: float, r_max: float) -> int:
    """Enough Newton terms to pass the peak of |b_m C(z, m)| at |z| = r_max."""
    return int(1.5 * r_max**chi + 40 * r_max ** (chi / 2) + 100)


@dataclass(frozen=True)
class RegularGrowthReport:
    status: str
    message: str
    equation: str
    predicted_orders: tuple
    chi_fit: Optional[float] = None
    L_fit: Optional[float] = None
    L_spread: Optional[float] = None
    matched_order: Optional[Fraction] = None
    residuals: tuple = ()
    max_residual: Optional[float] = None
    fit: Optional[GrowthFit] = None
    solution: Optional[NewtonSeriesSolution] = None
    recurrence: Optional[BinomialRecurrence] = None

    @property
    def passed(self) -> bool:
        return self.status == "PASS"

    def to_dict(self, digits: int = 30) -> dict:
        return {
            "status": self.status,
            "message": self.message,
            "equation": self.equation,
            "predicted_orders": [str(c) for c in self.predicted_orders],
            "matched_order": None if self.matched_order is None else str(self.matched_order),
            "chi_fit": None if self.chi_fit is None else serialize(self.chi_fit, digits),
            "L_fit": None if self.L_fit is None else serialize(self.L_fit, digits),
            "L_spread": None if self.L_spread is None else serialize(self.L_spread, digits),
            "residuals": [{"z": serialize(z, digits), "residual": serialize(v, digits)} for z, v in self.residuals],
            "max_residual": None if self.max_residual is None else serialize(self.max_residual, digits),
            "recurrence": None if self.recurrence is None else self.recurrence.to_dict(),
            "solution": None if self.solution is None else self.solution.to_dict(digits),
            "growth": None if self.fit is None else self.fit.to_dict(digits),
        }


CHI_TOL = 0.03
SPREAD_TOL = 0.05
RESIDUAL_TOL = 1e-15


def verify_regular_growth(
    eq: DifferenceEquation,
    terms: Optional[int] = None,
    r_grid: Optional[Sequence] = None,
    prec: int = DEFAULT_PREC,
    *,
    spot_points: int = 5,
) -> RegularGrowthReport:
    """Polygon -> recurrence -> minimal solution -> growth fit -> residuals.

    PASS needs chi_fit within 0.03 of a predicted order, per-decade L spread
    at most 5% and equation residual/|f| at most 1e-15 at ``spot_points``
    radii on the maximum-modulus ray.  A missing minimal solution gives
    INCONCLUSIVE.
    """
    grid = geometric_grid(1e3, 1e7, 9) if r_grid is None else list(r_grid)
    poly = newton_polygon(eq)
    text = eq.describe()
    if not poly.predicted_orders:
        return RegularGrowthReport("INCONCLUSIVE", "no order-<1 solution predicted", text, ())
    rec = binomial_recurrence(eq)
    r_max = max(float(r) for r in grid)
    chi_max = float(max(poly.predicted_orders))
    n_terms = max(500, terms if terms is not None else default_terms(chi_max, r_max))
    solve_prec = prec
    fit = None
    for _ in range(12):
        try:
            sol = solve_minimal(rec, n_terms, prec=solve_prec)
        except MinimalSolutionNotFoundError as exc:
            return RegularGrowthReport("INCONCLUSIVE", str(exc), text, poly.predicted_orders, recurrence=rec)
        try:
            logs, thetas = growth_samples(sol, grid, prec)
            fit = fit_growth_samples(grid, logs, thetas)
            spots = geometric_grid(min(map(float, grid)), r_max, spot_points)
            residuals = []
            for rho in spots:
                th = _nearest_theta(fit, rho)
                with workprec(sol.prec):
                    z = to_number(rho) * mpc(gmpy2.cos(mpfr(th)), gmpy2.sin(mpfr(th)))
                    if th == math.pi:
                        z = -to_number(rho)
                residuals.append((rho, float(equation_residual(eq, sol, z, prec))))
            break
        except NeedsMoreTermsError:
            n_terms *= 2
        except PrecisionExhaustedError as exc:
            need = exc.required_prec or 2 * solve_prec
            if need > MAX_PREC:
                raise
            solve_prec = max(need, solve_prec + 64)
    else:
        raise PrecisionExhaustedError("could not settle the growth samples")
    diffs = [(abs(fit.chi_fit - float(c)), c) for c in poly.predicted_orders]
    dist, matched = min(diffs)
    max_res = max(v for _, v in residuals)
    ok = dist <= CHI_TOL and fit.L_spread <= SPREAD_TOL and max_res <= RESIDUAL_TOL
    msg = (
        f"chi_fit={fit.chi_fit:.6f} vs predicted {matched}; L spread {fit.L_spread:.2e}; "
        f"max residual {max_res:.2e}"
    )
    return RegularGrowthReport(
        "PASS" if ok else "FAIL", msg, text, poly.predicted_orders, fit.chi_fit, fit.L_fit, fit.L_spread,
        matched if dist <= CHI_TOL else None, tuple(residuals), max_res, fit, sol, rec,
    )


def _nearest_theta(fit: GrowthFit, rho) -> float:
    if not fit.theta:
        return math.pi
    i = int(np.argmin([abs(math.log(float(r)) - math.log(float(rho))) for r in fit.r]))
    return float(fit.theta[i])


__all__ = [
    "BinomialRecurrence",
    "DifferenceEquation",
    "GrowthFit",
    "HullSegment",
    "NewtonEval",
    "NewtonPolygon",
    "NewtonSeriesSolution",
    "RegularGrowthReport",
    "binomial_recurrence",
    "default_terms",
    "equation_residual",
    "eval_newton_series",
    "fit_growth_samples",
    "growth_fit",
    "growth_samples",
    "load_equation",
    "newton_max_modulus",
    "newton_polygon",
    "parse_equation",
    "solve_minimal",
    "verify_regular_growth",
]
