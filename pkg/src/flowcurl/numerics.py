"""Scalar numerical routines: quadrature and special functions.

Kept dependency-free (stdlib math only) so the distribution layer can be
cross-checked against scipy in the test suite without sharing code paths.
"""

from __future__ import annotations

import math
from typing import Callable


def adaptive_simpson(
    f: Callable[[float], float],
    a: float,
    b: float,
    tol: float = 1e-9,
    max_depth: int = 60,
    max_evals: int = 2_000_000,
) -> float:
    """Adaptive Simpson quadrature of f over [a, b].

    Classic interval-halving scheme with the Richardson correction term;
    subintervals that hit max_depth are accepted at their current
    estimate.  max_evals bounds total work (depth alone does not), so a
    non-converging integrand degrades to a coarse answer, never a hang.
    """
    if b <= a:
        return 0.0

    def simpson(fa: float, fm: float, fb: float, width: float) -> float:
        return width / 6.0 * (fa + 4.0 * fm + fb)

    m = 0.5 * (a + b)
    fa, fm, fb = f(a), f(m), f(b)
    whole = simpson(fa, fm, fb, b - a)
    stack = [(a, b, fa, fm, fb, whole, tol, 0)]
    total = 0.0
    evals = 3
    while stack:
        a0, b0, fa, fm, fb, whole, eps, depth = stack.pop()
        m0 = 0.5 * (a0 + b0)
        lm = 0.5 * (a0 + m0)
        rm = 0.5 * (m0 + b0)
        flm, frm = f(lm), f(rm)
        evals += 2
        left = simpson(fa, flm, fm, m0 - a0)
        right = simpson(fm, frm, fb, b0 - m0)
        delta = left + right - whole
        if depth >= max_depth or evals >= max_evals or abs(delta) <= 15.0 * eps:
            total += left + right + delta / 15.0
        else:
            half = 0.5 * eps
            stack.append((a0, m0, fa, flm, fm, left, half, depth + 1))
            stack.append((m0, b0, fm, frm, fb, right, half, depth + 1))
    return total


def normal_cdf(x: float) -> float:
    """Standard normal CDF."""
    return 0.5 * (1.0 + math.erf(x / math.sqrt(2.0)))


def log_beta(a: float, b: float) -> float:
    """log B(a, b) via lgamma."""
    return math.lgamma(a) + math.lgamma(b) - math.lgamma(a + b)


def _betacf(a: float, b: float, x: float, tol: float, max_iter: int) -> float:
    """Continued fraction for the incomplete beta, evaluated by the
    modified Lentz method. Returns NaN if not converged in max_iter."""
    tiny = 1e-300
    qab = a + b
    qap = a + 1.0
    qam = a - 1.0
    c = 1.0
    d = 1.0 - qab * x / qap
    if abs(d) < tiny:
        d = tiny
    d = 1.0 / d
    h = d
    for m in range(1, max_iter + 1):
        m2 = 2 * m
        aa = m * (b - m) * x / ((qam + m2) * (a + m2))
        d = 1.0 + aa * d
        if abs(d) < tiny:
            d = tiny
        c = 1.0 + aa / c
        if abs(c) < tiny:
            c = tiny
        d = 1.0 / d
        h *= d * c
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2))
        d = 1.0 + aa * d
        if abs(d) < tiny:
            d = tiny
        c = 1.0 + aa / c
        if abs(c) < tiny:
            c = tiny
        d = 1.0 / d
        dl = d * c
        h *= dl
        if abs(dl - 1.0) < tol:
            return h
    return math.nan


def _betainc_quad(a: float, b: float, x: float) -> float:
    """Quadrature fallback for I_x(a, b): integrate the Beta density under
    the substitution t = sigmoid(w), which removes the endpoint
    singularities (integrand ~ exp(a*w) at -inf, exp(-b*w) at +inf)."""
    if x <= 0.0:
        return 0.0
    if x >= 1.0:
        return 1.0
    log_b = log_beta(a, b)

    def g(w: float) -> float:
        # sigmoid(w)**a * (1-sigmoid(w))**b / B(a,b), in log space
        if w >= 0.0:
            log_s = -math.log1p(math.exp(-w))
            log_1ms = -w - math.log1p(math.exp(-w))
        else:
            log_s = w - math.log1p(math.exp(w))
            log_1ms = -math.log1p(math.exp(w))
        return math.exp(a * log_s + b * log_1ms - log_b)

    w_hi = math.log(x / (1.0 - x))
    w_lo = min(w_hi, -(30.0 / a + 10.0))
    return adaptive_simpson(g, w_lo, w_hi, tol=1e-12) if w_hi > w_lo else 0.0


def regularized_incomplete_beta(
    a: float, b: float, x: float, tol: float = 1e-12, max_iter: int = 300
) -> float:
    """Regularized incomplete beta I_x(a, b).

    Lentz continued fraction with the usual symmetry split; falls back to
    quadrature of the Beta density when the fraction fails to converge.
    """
    if a <= 0.0 or b <= 0.0:
        raise ValueError(f"incomplete beta requires a, b > 0, got a={a}, b={b}")
    if x < 0.0 or x > 1.0:
        raise ValueError(f"incomplete beta argument must be in [0, 1], got {x}")
    if x == 0.0:
        return 0.0
    if x == 1.0:
        return 1.0
    front = math.exp(a * math.log(x) + b * math.log1p(-x) - log_beta(a, b))
    if x < (a + 1.0) / (a + b + 2.0):
        cf = _betacf(a, b, x, tol, max_iter)
        if math.isnan(cf):
            return _betainc_quad(a, b, x)
        return front * cf / a
    cf = _betacf(b, a, 1.0 - x, tol, max_iter)
    if math.isnan(cf):
        return _betainc_quad(a, b, x)
    return 1.0 - front * cf / b
