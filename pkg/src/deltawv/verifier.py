"""Empirical checks of the difference expansions and the difference WV estimate.

Each check samples the positive axis on a geometric grid, compares an exact
forward difference with its predicted form and fits the log-log decay of the
discrepancy.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional, Sequence

import numpy as np
from gmpy2 import mpfr

from ._numeric import (
    GUARD_BITS,
    as_rational,
    exact_point,
    geometric_grid,
    log2abs,
    pow2,
    round_prec,
    serialize,
    to_number,
    workprec,
)
from .errors import InsufficientDataError, PrecisionExhaustedError
from .series_core import PowerSeries, delta_exact, evaluate
from .stirling import _expansion
from .wiman_valiron import maximal_term

DEFAULT_VERIFY_PREC = 512
DEFAULT_EPS = 0.05
NOISE_FACTOR = 8


def default_grid():
    """9 geometric points from 10^2 to 10^6."""
    return geometric_grid(1e2, 1e6, 9)


def _as_mp(x):
    return to_number(x) if isinstance(x, Fraction) else x


@dataclass(frozen=True)
class DecayRow:
    r: object
    lhs: object
    rhs: object
    abs_err: object
    noise: object
    bound: object
    within_bound: bool
    used_in_fit: bool

    def to_dict(self, digits: int = 30) -> dict:
        return {
            "r": serialize(self.r, digits),
            "lhs": serialize(self.lhs, digits),
            "rhs": serialize(self.rhs, digits),
            "abs_err": serialize(self.abs_err, digits),
            "noise": serialize(self.noise, digits),
            "bound": serialize(self.bound, digits),
            "within_bound": self.within_bound,
            "used_in_fit": self.used_in_fit,
        }


@dataclass(frozen=True)
class DecayReport:
    """Truncation error of the Stirling expansion of Delta^n f / f on a grid.

    ``claimed_exponent_full`` is (n+N+1)(sigma-1) ((N+1)(sigma-1) for the
    first-difference kind) and ``claimed_exponent_conservative`` is (N+1)(sigma-1), the decay of the
    first omitted term.  ``status`` is PASS when sigma < 1 and the fitted
    slope is at most the conservative exponent plus eps, FAIL otherwise, and
    UNRELIABLE when more than half of the rows were dropped.
    """

    f_name: str
    n: int
    N: int
    eta: object
    eps: float
    prec: int
    sigma: Optional[float]
    rows: tuple
    fitted_slope: Optional[float]
    r2: Optional[float]
    claimed_exponent_full: Optional[float]
    claimed_exponent_conservative: Optional[float]
    status: str
    dropped: int = 0
    excluded: tuple = ()
    kind: str = "expansion"
    note: str = ""

    @property
    def passed(self) -> bool:
        return self.status == "PASS"

    @property
    def all_within_bound(self) -> bool:
        return all(row.within_bound for row in self.rows)

    def to_dict(self, digits: int = 30) -> dict:
        return {
            "kind": self.kind,
            "f_name": self.f_name,
            "n": self.n,
            "N": self.N,
            "eta": serialize(_as_mp(self.eta) if isinstance(self.eta, Fraction) else self.eta, digits),
            "eps": serialize(self.eps, digits),
            "prec": self.prec,
            "sigma": None if self.sigma is None else serialize(self.sigma, digits),
            "rows": [row.to_dict(digits) for row in self.rows],
            "fitted_slope": None if self.fitted_slope is None else serialize(self.fitted_slope, digits),
            "r2": None if self.r2 is None else serialize(self.r2, digits),
            "claimed_exponent_full": _ser_opt(self.claimed_exponent_full, digits),
            "claimed_exponent_conservative": _ser_opt(self.claimed_exponent_conservative, digits),
            "all_rows_within_bound": self.all_within_bound,
            "dropped": self.dropped,
            "excluded": [serialize(r, digits) for r in self.excluded],
            "status": self.status,
            "note": self.note,
        }


def _ser_opt(x, digits):
    return None if x is None else serialize(x, digits)


def fit_decay_exponent(rows) -> tuple[float, float]:
    """Least-squares slope of log abs_err against log r, and its r^2.

    ``rows`` holds (r, abs_err) pairs or objects with ``r``/``abs_err``.
    Zero errors carry no slope information and are skipped.
    """
    pts = []
    for row in rows:
        r, err = (row.r, row.abs_err) if hasattr(row, "abs_err") else row
        if err is None or err == 0:
            continue
        pts.append((math.log(float(r)), log2abs(err) * math.log(2)))
    if len(pts) < 4:
        raise InsufficientDataError(f"need at least 4 usable rows, got {len(pts)}")
    x, y = np.array(pts).T
    slope, icpt = np.polyfit(x, y, 1)
    resid = y - (slope * x + icpt)
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    r2 = 1.0 if ss_tot == 0 else 1.0 - float(np.sum(resid**2)) / ss_tot
    return float(slope), r2


def _sigma(f: PowerSeries) -> Optional[float]:
    return None if f.order_hint is None else float(f.order_hint)


def _decay_row(f, n, N, eta, r, sigma, eps, prec):
    exact = f.is_polynomial and as_rational(eta) is not None
    point = exact_point(r) if exact else r
    d = delta_exact(f, n, eta, point, prec)
    base = evaluate(f, point, prec)
    rhs, rhs_err = _expansion(f, n, N, eta, point, prec)
    if d.exact and base.exact:
        lhs = d.value / base.value
        err = abs(lhs - rhs)
        lhs_err = Fraction(0)
    else:
        wp = round_prec(prec + GUARD_BITS)
        with workprec(wp):
            fv = _as_mp(base.value)
            lhs = _as_mp(d.value) / fv
            lhs_err = (_as_mp(d.tail_bound) + abs(lhs) * _as_mp(base.tail_bound)) / abs(fv)
            err = abs(lhs - _as_mp(rhs))
    with workprec(round_prec(prec + GUARD_BITS)):
        noise = _as_mp(lhs_err) + _as_mp(rhs_err)
        if sigma is not None:
            bound = abs(to_number(eta)) ** (N + 1) * to_number(r) ** ((N + 1) * (sigma - 1) + eps)
        else:
            bound = None
        within = bound is not None and _as_mp(err) <= bound
        usable = err != 0 and _as_mp(err) >= NOISE_FACTOR * noise
    return DecayRow(r, lhs, rhs, err, noise, bound, bool(within), bool(usable))


def verify_expansion(
    f: PowerSeries,
    n: int,
    N: int,
    eta=1,
    r_grid: Optional[Sequence] = None,
    eps: float = DEFAULT_EPS,
    prec: int = DEFAULT_VERIFY_PREC,
    *,
    kind: str = "expansion",
) -> DecayReport:
    """Delta^n f(r)/f(r) against its expansion truncated at N, on ``r_grid``."""
    if not N >= n >= 1:
        raise ValueError("need N >= n >= 1")
    grid = default_grid() if r_grid is None else list(r_grid)
    sigma = _sigma(f)
    rows, excluded = [], []
    dropped = 0
    for r in grid:
        if f.excluded(r):
            excluded.append(r)
            continue
        try:
            rows.append(_decay_row(f, n, N, eta, r, sigma, eps, prec))
        except PrecisionExhaustedError:
            dropped += 1
    # the first-difference statement claims (N+1)(sigma-1); the general one (n+N+1)(sigma-1)
    full_order = N + 1 if kind == "first-difference" else n + N + 1
    full = None if sigma is None else full_order * (sigma - 1)
    conservative = None if sigma is None else (N + 1) * (sigma - 1)
    slope = r2 = None
    note = ""
    usable = [row for row in rows if row.used_in_fit]
    if rows and all(row.abs_err == 0 for row in rows):
        note = "expansion exact at every row"
    elif len(usable) >= 4:
        slope, r2 = fit_decay_exponent(usable)
    else:
        note = f"only {len(usable)} rows above the noise floor"
    if dropped * 2 > len(grid) - len(excluded):
        status = "UNRELIABLE"
    elif sigma is None or sigma >= 1:
        status = "FAIL"
        note = note or "order >= 1: expansion hypothesis not met"
    elif slope is None:
        status = "PASS" if note == "expansion exact at every row" else "UNRELIABLE"
    else:
        status = "PASS" if slope <= conservative + eps else "FAIL"
    return DecayReport(
        f.name, n, N, eta, eps, prec, sigma, tuple(rows), slope, r2, full, conservative, status,
        dropped, tuple(excluded), kind, note,
    )


def verify_first_difference(
    f: PowerSeries,
    N: int,
    eta=1,
    r_grid: Optional[Sequence] = None,
    eps: float = DEFAULT_EPS,
    prec: int = DEFAULT_VERIFY_PREC,
) -> DecayReport:
    """The n = 1 case; both exponents coincide up to the shift by one."""
    return verify_expansion(f, 1, N, eta, r_grid, eps, prec, kind="first-difference")


@dataclass(frozen=True)
class WVDifferenceRow:
    r: object
    nu: int
    delta_ratio: object
    wv_prediction: object
    rel_err: object
    bound: object
    within: bool

    def to_dict(self, digits: int = 30) -> dict:
        return {
            "r": serialize(self.r, digits),
            "nu": self.nu,
            "delta_ratio": serialize(self.delta_ratio, digits),
            "wv_prediction": serialize(self.wv_prediction, digits),
            "rel_err": serialize(self.rel_err, digits),
            "bound": serialize(self.bound, digits),
            "within": self.within,
        }


@dataclass(frozen=True)
class WVDifferenceReport:
    f_name: str
    k: int
    eps: float
    prec: int
    rows: tuple
    status: str
    hypothesis_met: bool
    excluded: tuple = ()

    @property
    def passed(self) -> bool:
        return self.status == "PASS"

    def to_dict(self, digits: int = 30) -> dict:
        return {
            "f_name": self.f_name,
            "k": self.k,
            "eps": serialize(self.eps, digits),
            "prec": self.prec,
            "rows": [row.to_dict(digits) for row in self.rows],
            "hypothesis_met": self.hypothesis_met,
            "excluded": [serialize(r, digits) for r in self.excluded],
            "status": self.status,
        }


def verify_wv_difference(
    f: PowerSeries,
    k: int,
    r_grid: Optional[Sequence] = None,
    eps: float = DEFAULT_EPS,
    prec: int = DEFAULT_VERIFY_PREC,
    eta=1,
) -> WVDifferenceReport:
    """|Delta^k f(r)/f(r) / (nu(r) eta/r)^k - 1| against nu(r)^(-1/8+eps).

    Sampled at z = r; for nonnegative coefficients |f(r)| = M(r), so r lies
    where the estimate applies.  Order outside (0, 1) is reported as
    hypothesis not met and the run cannot PASS.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    grid = geometric_grid(1e3, 1e7, 9) if r_grid is None else list(r_grid)
    sigma = _sigma(f)
    hyp = sigma is not None and 0 < sigma < 1
    rows, excluded = [], []
    wp = round_prec(prec + GUARD_BITS)
    for r in grid:
        if f.excluded(r):
            excluded.append(r)
            continue
        _, nu = maximal_term(f, r, prec)
        d = delta_exact(f, k, eta, r, prec)
        base = evaluate(f, r, prec)
        with workprec(wp):
            ratio = _as_mp(d.value) / _as_mp(base.value)
            pred = (mpfr(nu) * to_number(eta) / to_number(r)) ** k
            rel = abs(ratio / pred - 1) if nu > 0 else mpfr("inf")
            bound = mpfr(max(nu, 1)) ** (-0.125 + eps)
            rows.append(WVDifferenceRow(r, nu, ratio, pred, rel, bound, bool(rel <= bound)))
    ok = hyp and rows and all(row.within for row in rows)
    return WVDifferenceReport(f.name, k, eps, prec, tuple(rows), "PASS" if ok else "FAIL", hyp, tuple(excluded))


@dataclass(frozen=True)
class GammaRow:
    """Delta Phi(z)/Phi(z) for Phi = 1/Gamma against 1/z - 1.

    ``match`` holds when the difference is within the combined error bound
    (floored at 2^(8-prec)).  ``wv_*`` compare with (nu(z)/z) eta and the
    band nu^(-1/8+eps); nu is None when not computed.
    """

    z: object
    delta_ratio: object
    identity_value: object
    abs_diff: object
    error_bound: object
    match: bool
    method: str
    nu: Optional[int] = None
    wv_prediction: object = None
    wv_rel_err: object = None
    wv_band: object = None
    violates_band: Optional[bool] = None

    def to_dict(self, digits: int = 30) -> dict:
        return {
            "z": serialize(self.z, digits),
            "delta_ratio": serialize(self.delta_ratio, digits),
            "identity": "1/z-1",
            "identity_value": serialize(self.identity_value, digits),
            "abs_diff": serialize(self.abs_diff, digits),
            "error_bound": serialize(self.error_bound, digits),
            "match": self.match,
            "method": self.method,
            "nu": self.nu,
            "wv_prediction": _ser_opt(self.wv_prediction, digits),
            "wv_rel_err": _ser_opt(self.wv_rel_err, digits),
            "wv_band": _ser_opt(self.wv_band, digits),
            "violates_band": self.violates_band,
        }


NU_LIMIT = 1e4


def gamma_counterexample(z_list: Sequence, prec: int = 256, eps: float = DEFAULT_EPS, nu_limit: float = NU_LIMIT):
    """Rows of the 1/Gamma first-difference identity (eta = 1).

    For |z| up to the series radius Phi comes from its Taylor series; beyond
    it from the closed form (the row's ``method`` says which).  The central
    index is computed for z <= ``nu_limit``.
    """
    from .series_core import builtin

    phi = builtin("recip_gamma")
    rows = []
    wp = round_prec(prec + GUARD_BITS)
    for z in z_list:
        if float(z) <= 1:
            raise ValueError("z must be real and > 1")
        d = delta_exact(phi, 1, 1, z, prec)
        base = evaluate(phi, z, prec)
        with workprec(wp):
            zz = to_number(z)
            ratio = d.value / base.value
            ident = 1 / zz - 1
            diff = abs(ratio - ident)
            bound = (d.tail_bound + abs(ratio) * base.tail_bound) / abs(base.value)
            bound = max(bound, pow2(8 - prec))
            match = diff <= bound
            nu = pred = rel = band = viol = None
            if float(z) <= nu_limit:
                nu = maximal_term(phi, z, prec)[1]
                pred = mpfr(nu) / zz
                rel = abs(ratio / pred - 1)
                band = mpfr(max(nu, 1)) ** (-0.125 + eps)
                viol = bool(rel > band)
        method = d.method if d.method == base.method else "mixed"
        rows.append(GammaRow(z, ratio, ident, diff, bound, bool(match), method, nu, pred, rel, band, viol))
    return rows


__all__ = [
    "DEFAULT_EPS",
    "DEFAULT_VERIFY_PREC",
    "DecayReport",
    "DecayRow",
    "GammaRow",
    "WVDifferenceReport",
    "WVDifferenceRow",
    "default_grid",
    "fit_decay_exponent",
    "gamma_counterexample",
    "verify_expansion",
    "verify_first_difference",
    "verify_wv_difference",
]
