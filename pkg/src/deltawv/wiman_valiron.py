"""Maximal term, central index, maximum modulus and the pointwise estimates.

For f(z) = sum a_n z^n and r > 0:

* mu(r)  = max_n |a_n| r^n (maximal term),
* nu(r)  = greatest n attaining mu(r) (central index),
* M(r)   = max_{|z|=r} |f(z)| (maximum modulus).

Near points where |f| is close to M(r), f^(k)(z)/f(z) ~ (nu(r)/z)^k.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional, Sequence

import gmpy2
import numpy as np
from gmpy2 import mpc, mpfr

from ._numeric import (
    DEFAULT_PREC,
    GUARD_BITS,
    check_prec,
    pow2,
    round_prec,
    serialize,
    to_number,
    workprec,
)
from .errors import NonConvergenceError, ValidationError
from .series_core import MAX_TERMS, PowerSeries, _log_derivative, evaluate

DEFAULT_CIRCLE_SAMPLES = 256
_GOLDEN = (math.sqrt(5) - 1) / 2


def _log_max_closed(f: PowerSeries, R, wp: int, samples: int = 1024) -> float:
    """log M(R) from the closed form (sampled on the upper half circle unless signs decide)."""
    with workprec(wp):
        RR = to_number(R)
        if f.nonneg_coeffs:
            return float(gmpy2.log(abs(f.closed_form(RR, wp))))
        if f.sign_pattern == "alternating":
            return float(gmpy2.log(abs(f.closed_form(-RR, wp))))
        best = None
        for k in range(samples + 1):
            th = gmpy2.const_pi() * k / samples
            v = abs(f.closed_form(mpc(RR * gmpy2.cos(th), RR * gmpy2.sin(th)), wp))
            best = v if best is None or v > best else best
        return float(gmpy2.log(best))


def _maximal_term_cauchy(f: PowerSeries, r, prec: int):
    """Maximal term from Cauchy's formula a_n r^n = (1/N) sum_k f(r w^k) w^(-kn).

    Samples come from the series' closed form.  Aliasing is ruled out with
    nu(r) <= log M(e r) - log mu(r) (log mu is convex in log r with slope
    nu): N doubles until N/2 exceeds that bound and the ``2 nu + 32`` scan
    window.  Accuracy is double precision relative to M(r), ample for the
    argmax away from exact ties.
    """
    wp = 96
    N = 512
    log_m_er = _log_max_closed(f, to_number(r) * gmpy2.exp(mpfr(1)), wp)
    while True:
        half = N // 2
        with workprec(wp):
            rr = to_number(r)
            vals = []
            for k in range(half + 1):
                th = 2 * gmpy2.const_pi() * k / N
                vals.append(f.closed_form(mpc(rr * gmpy2.cos(th), rr * gmpy2.sin(th)), wp))
            scale = max(abs(v) for v in vals)
            norm = [complex(v / scale) for v in vals]
        # real coefficients: f(conj z) = conj f(z)
        full = np.array(norm + [c.conjugate() for c in reversed(norm[1:half])])
        t = np.abs(np.fft.fft(full)) / N
        nu = int(np.flatnonzero(t >= t.max() * (1 - 1e-12))[-1])
        with workprec(wp):
            log_mu = float(gmpy2.log(scale)) + math.log(t[nu])
        nu_bound = 1.25 * max(0.0, log_m_er - log_mu) + 32
        if 3 * nu + 32 < half and nu_bound < half:
            break
        N *= 2
        if N > 1 << 22:
            raise NonConvergenceError(f"{f.name}: Cauchy sampling for the maximal term did not settle at r={r}")
    with workprec(prec):
        return mpfr(float(t[nu])) * scale, nu


def maximal_term(
    f: PowerSeries, r, prec: int = DEFAULT_PREC, *, max_terms: int = MAX_TERMS, method: str = "auto"
):
    """(mu(r), nu(r)): the maximal term and its greatest attaining index.

    The scan runs until ``2 * nu + 32`` indices past the running argmax show
    nothing larger.  Terms within a relative 2^(-prec + small) of the
    running maximum count as ties and move the index upward.

    ``method="cauchy"`` (the default beyond the series radius of functions
    with a closed form, unless their coefficients are exact rationals) reads |a_n| r^n off an FFT of samples on |z| = r
    instead of computing the coefficients.
    """
    check_prec(prec)
    if method not in ("auto", "scan", "cauchy"):
        raise ValueError(f"unknown method {method!r}")
    if method == "auto":
        use_cauchy = f.closed_form is not None and float(r) > f.series_radius
        if use_cauchy and f.has_exact_coefficients:
            # rational coefficients are cheap: scan first, sample only if the scan runs out
            try:
                return maximal_term(f, r, prec, max_terms=max_terms, method="scan")
            except NonConvergenceError:
                pass
        method = "cauchy" if use_cauchy else "scan"
    if method == "cauchy":
        if f.closed_form is None:
            raise ValueError(f"{f.name} has no closed form to sample")
        return _maximal_term_cauchy(f, r, prec)
    wp = round_prec(prec + GUARD_BITS)
    with workprec(wp):
        rr = to_number(r)
        if not (isinstance(rr, type(mpfr())) and rr > 0):
            raise ValueError("r must be a positive real")
        last = f.degree if f.is_polynomial else None
        best = mpfr(-1)
        best_n = 0
        rpow = mpfr(1)
        coeffs = f.coefficients(63, wp)
        n = 0
        while True:
            if n >= len(coeffs):
                coeffs = f.coefficients(n + max(64, n // 2), wp)
            t = abs(coeffs[n]) * rpow
            tol = pow2(-prec + 2 * int(math.log2(n + 2)) + 8)
            if t >= best * (1 - tol):
                if t > best:
                    best = t
                best_n = n
            n += 1
            if last is not None and n > last:
                break
            if n > best_n + 2 * best_n + 32:
                break
            if n > max_terms:
                raise NonConvergenceError(f"{f.name}: maximal term scan did not settle at r={r}")
            rpow *= rr
        return best, best_n


def central_index(f: PowerSeries, r, prec: int = DEFAULT_PREC, method: str = "auto") -> int:
    """nu(r, f), the greatest index attaining the maximal term."""
    return maximal_term(f, r, prec, method=method)[1]


def _abs_at(f: PowerSeries, r, theta: float, wp: int):
    with workprec(wp):
        z = mpc(to_number(r) * gmpy2.cos(mpfr(theta)), to_number(r) * gmpy2.sin(mpfr(theta)))
        return abs(evaluate(f, z, wp).value)


def max_modulus_point(
    f: PowerSeries, r, circle_samples: int = DEFAULT_CIRCLE_SAMPLES, prec: int = DEFAULT_PREC
):
    """(M(r), theta) with |f(r e^{i theta})| = M(r).

    Sign patterns give the maximum on a real axis directly: nonnegative
    coefficients at theta = 0, alternating ones at theta = pi (there
    |f(-r)| = sum |a_n| r^n).  Otherwise ``circle_samples`` equally spaced
    angles are scanned (the upper half circle suffices for real
    coefficients) and the best one is refined by golden-section search.
    """
    check_prec(prec)
    if circle_samples < 1:
        raise ValueError("circle_samples must be >= 1")
    wp = round_prec(prec + GUARD_BITS)
    if f.nonneg_coeffs:
        return abs(evaluate(f, r, wp).value), 0.0
    if f.sign_pattern == "alternating":
        with workprec(wp):
            return abs(evaluate(f, -to_number(r), wp).value), math.pi
    half = max(1, circle_samples // 2)
    thetas = [math.pi * i / half for i in range(half + 1)]
    vals = [_abs_at(f, r, t, wp) for t in thetas]
    i = max(range(len(vals)), key=lambda j: vals[j])
    best, best_t = vals[i], thetas[i]
    step = math.pi / half
    a, b = best_t - step, best_t + step
    c, d = b - _GOLDEN * (b - a), a + _GOLDEN * (b - a)
    fc, fd = _abs_at(f, r, c, wp), _abs_at(f, r, d, wp)
    for _ in range(60):
        if b - a < 1e-12:
            break
        if fc > fd:
            b, d, fd = d, c, fc
            c = b - _GOLDEN * (b - a)
            fc = _abs_at(f, r, c, wp)
        else:
            a, c, fc = c, d, fd
            d = a + _GOLDEN * (b - a)
            fd = _abs_at(f, r, d, wp)
    for val, t in ((fc, c), (fd, d)):
        if val > best:
            best, best_t = val, t
    return best, float(best_t)


def max_modulus(f: PowerSeries, r, circle_samples: int = DEFAULT_CIRCLE_SAMPLES, prec: int = DEFAULT_PREC):
    """M(r, f) = max_{|z|=r} |f(z)|."""
    return max_modulus_point(f, r, circle_samples, prec)[0]


@dataclass(frozen=True)
class WVSample:
    r: object
    mu: object
    nu: int
    M: object
    theta: float = 0.0

    def to_dict(self, digits: int = 30) -> dict:
        return {
            "r": serialize(self.r, digits),
            "mu": serialize(self.mu, digits),
            "nu": self.nu,
            "M": serialize(self.M, digits),
        }


@dataclass(frozen=True)
class WVProfile:
    f_name: str
    samples: tuple
    order_fit: Optional[float] = None

    def to_dict(self, digits: int = 30) -> dict:
        return {
            "f_name": self.f_name,
            "samples": [s.to_dict(digits) for s in self.samples],
            "order_fit": None if self.order_fit is None else serialize(self.order_fit, digits),
        }


def wv_profile(
    f: PowerSeries,
    r_grid: Sequence,
    prec: int = DEFAULT_PREC,
    circle_samples: int = DEFAULT_CIRCLE_SAMPLES,
    fit_order: bool = True,
) -> WVProfile:
    """Sample (mu, nu, M) on ``r_grid`` (kept in grid order)."""
    samples = []
    for r in r_grid:
        mu, nu = maximal_term(f, r, prec)
        M, theta = max_modulus_point(f, r, circle_samples, prec)
        samples.append(WVSample(r, mu, nu, M, theta))
    order = None
    if fit_order and len(r_grid) >= 2:
        order = _slope_log_nu([s.r for s in samples], [s.nu for s in samples])
    return WVProfile(f.name, tuple(samples), order)


def _slope_log_nu(rs, nus) -> float:
    pts = [(math.log(float(r)), math.log(n)) for r, n in zip(rs, nus) if n > 0]
    if len(pts) < 2:
        return 0.0
    x, y = np.array(pts).T
    if np.ptp(x) == 0:
        return 0.0
    return float(np.polyfit(x, y, 1)[0])


def order_from_central_index(f: PowerSeries, r_grid: Sequence, prec: int = DEFAULT_PREC) -> float:
    """Least-squares slope of log nu(r) against log r.

    Radii with nu = 0 are skipped; nu identically 0 gives 0.
    """
    rs = [float(r) for r in r_grid]
    if len(rs) < 5:
        raise ValueError("need at least 5 grid points")
    if math.log10(max(rs) / min(rs)) < 3 - 1e-9:
        raise ValueError("grid must span at least 3 decades")
    nus = [central_index(f, r, prec) for r in r_grid]
    return _slope_log_nu(rs, nus)


SHIFT_TS = (Fraction(0), Fraction(1, 4), Fraction(1, 2), Fraction(3, 4), Fraction(1))


@dataclass(frozen=True)
class BoundRow:
    """One radius of the pointwise check.

    ``lhs``/``rhs``: |f^(k)(r)/f(r)| and r^(k(sigma-1)+eps).
    ``shift_ratios``: (t, |f(r + t eta)/f(r)|) pairs, to lie within
    exp(-+ r^(sigma-1+eps)) = ``shift_bounds``.
    """

    r: object
    lhs: object
    rhs: object
    passed: Optional[bool]
    status: str
    shift_ratios: tuple = ()
    shift_bounds: tuple = ()

    def to_dict(self, digits: int = 30) -> dict:
        return {
            "r": serialize(self.r, digits),
            "lhs": serialize(self.lhs, digits),
            "rhs": serialize(self.rhs, digits),
            "pass": self.passed,
            "status": self.status,
            "shift_ratios": [{"t": str(t), "ratio": serialize(v, digits)} for t, v in self.shift_ratios],
            "shift_bounds": [serialize(b, digits) for b in self.shift_bounds],
        }


def _order_of(f: PowerSeries) -> Fraction:
    if f.order_hint is None:
        raise ValidationError(f"{f.name} has no order hint")
    return f.order_hint


def check_pointwise_bounds(
    f: PowerSeries,
    k: int,
    eps: float,
    r_grid: Sequence,
    eta=1,
    prec: int = DEFAULT_PREC,
    ts: Sequence = SHIFT_TS,
) -> list[BoundRow]:
    """|f^(k)(r)/f(r)| <= r^(k(sigma-1)+eps) and
    exp(-r^(sigma-1+eps)) <= |f(r + t eta)/f(r)| <= exp(r^(sigma-1+eps)).

    Radii inside the series' zero-exclusion policy are reported with status
    "excluded" and no verdict.
    """
    sigma = _order_of(f)
    if sigma >= 1:
        raise ValidationError(f"bounds need order < 1, {f.name} has {sigma}")
    if k < 1:
        raise ValueError("k must be >= 1")
    rows = []
    wp = round_prec(prec + GUARD_BITS)
    for r in r_grid:
        if f.excluded(r):
            rows.append(BoundRow(r, None, None, None, "excluded"))
            continue
        with workprec(wp):
            rr = to_number(r)
            ld, _ = _log_derivative(f, k, r, wp)
            lhs = abs(to_number(ld)) if isinstance(ld, Fraction) else abs(ld)
            rhs = rr ** (k * (float(sigma) - 1) + eps)
            ok = lhs <= rhs
            base = evaluate(f, r, wp).value
            base = to_number(base) if isinstance(base, Fraction) else base
            e = to_number(eta)
            expo = gmpy2.exp(rr ** (float(sigma) - 1 + eps))
            lo, hi = 1 / expo, expo
            ratios = []
            for t in ts:
                v = evaluate(f, rr + e * to_number(t), wp).value
                v = to_number(v) if isinstance(v, Fraction) else v
                q = abs(v / base)
                ratios.append((t, q))
                ok = ok and lo <= q <= hi
        rows.append(BoundRow(r, lhs, rhs, bool(ok), "pass" if ok else "fail", tuple(ratios), (lo, hi)))
    return rows


@dataclass(frozen=True)
class WVCoreFit:
    """Empirical constant C in |f^(k)/f - (nu/r)^k| <= C (nu/r)^k nu^(-1/8+eps).

    ``per_k[k]`` is the largest normalised deviation seen for that k;
    ``C`` is the maximum over k.
    """

    C: float
    per_k: dict
    rows: tuple
    eps: float


def wv_core_constant(
    f: PowerSeries, r_grid: Sequence, kmax: int = 4, eps: float = 0.05, prec: int = DEFAULT_PREC
) -> WVCoreFit:
    """Fit C for k = 1..kmax at z = r (requires nonnegative coefficients)."""
    if not f.nonneg_coeffs:
        raise ValidationError("the core estimate is sampled on the positive axis; needs nonneg coefficients")
    rows = []
    per_k: dict = {}
    wp = round_prec(prec + GUARD_BITS)
    for r in r_grid:
        nu = central_index(f, r, prec)
        if nu == 0:
            continue
        with workprec(wp):
            pred_base = mpfr(nu) / to_number(r)
            for k in range(1, kmax + 1):
                ld, _ = _log_derivative(f, k, r, wp)
                ld = to_number(ld) if isinstance(ld, Fraction) else ld
                pred = pred_base**k
                dev = abs(ld - pred) / (pred * mpfr(nu) ** (-0.125 + eps))
                rows.append((r, k, nu, float(dev)))
                per_k[k] = max(per_k.get(k, 0.0), float(dev))
    C = max(per_k.values()) if per_k else 0.0
    return WVCoreFit(C, per_k, tuple(rows), eps)


__all__ = [
    "BoundRow",
    "DEFAULT_CIRCLE_SAMPLES",
    "SHIFT_TS",
    "WVCoreFit",
    "WVProfile",
    "WVSample",
    "central_index",
    "check_pointwise_bounds",
    "max_modulus",
    "max_modulus_point",
    "maximal_term",
    "order_from_central_index",
    "wv_core_constant",
    "wv_profile",
]
