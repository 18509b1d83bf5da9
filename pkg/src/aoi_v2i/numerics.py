"""Scalar special functions and a bracketing minimizer."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy import special

from .errors import DomainError, EvaluationError, ValidationError

INV_PHI = (math.sqrt(5.0) - 1.0) / 2.0
INV_PHI_SQ = (3.0 - math.sqrt(5.0)) / 2.0
_INV_E = math.exp(-1.0)

# Poisson mass beyond this many standard deviations is below 1e-30.
_POISSON_SPAN_SIGMAS = 14.0


def _require_finite(name, x):
    if not math.isfinite(x):
        raise DomainError(f"{name} must be finite, got {x!r}")


def bessel_j0(x: float) -> float:
    """Zero-order Bessel function of the first kind."""
    x = float(x)
    _require_finite("x", x)
    return float(special.j0(x))


def marcum_q1(a: float, b: float) -> float:
    """First-order Marcum Q function Q1(a, b).

    Evaluated as a Poisson mixture,

        Q1(a, b) = sum_k Pois(k; a^2/2) * P[Pois(b^2/2) <= k],

    which only involves positive terms and stays stable for large
    arguments. The sum is truncated to the window where the a-side
    Poisson weights are non-negligible.
    """
    a, b = float(a), float(b)
    _require_finite("a", a)
    _require_finite("b", b)
    if a < 0 or b < 0:
        raise DomainError(f"Marcum Q1 needs a, b >= 0, got a={a}, b={b}")
    if b == 0.0:
        return 1.0
    mu_b = 0.5 * b * b
    if a == 0.0:
        return math.exp(-mu_b)
    mu_a = 0.5 * a * a
    span = _POISSON_SPAN_SIGMAS * math.sqrt(mu_a) + 30.0
    lo = max(0, int(math.floor(mu_a - span)))
    hi = int(math.ceil(mu_a + span))
    k = np.arange(lo, hi + 1, dtype=float)
    log_w = k * math.log(mu_a) - mu_a - special.gammaln(k + 1.0)
    # gammaincc(k+1, m) is the Poisson(m) CDF evaluated at k
    cdf_b = special.gammaincc(k + 1.0, mu_b)
    q = float(np.sum(np.exp(log_w) * cdf_b))
    return min(1.0, max(0.0, q))


def lambert_w0(z: float) -> float:
    """Principal branch of the Lambert W function for real z >= -1/e.

    Halley iteration from a branch-aware initial guess: the branch-point
    series near -1/e, log1p for moderate z and the two-term asymptotic
    expansion for large z.
    """
    z = float(z)
    _require_finite("z", z)
    if z < -_INV_E:
        # tolerate a few ulps of rounding in arguments built as -x*exp(-x)
        if z < -_INV_E * (1.0 + 4.0 * np.finfo(float).eps):
            raise DomainError(f"lambert_w0 has no real value for z={z} < -1/e")
        return -1.0
    if z == 0.0:
        return 0.0
    if z == -_INV_E:
        return -1.0

    if z < -0.25:
        p = math.sqrt(2.0 * (math.e * z + 1.0))
        w = -1.0 + p - p * p / 3.0 + 11.0 / 72.0 * p ** 3
    elif z < 3.0:
        w = math.log1p(z)
    else:
        l1 = math.log(z)
        l2 = math.log(l1)
        w = l1 - l2 + l2 / l1

    for _ in range(60):
        ew = math.exp(w)
        f = w * ew - z
        wp1 = w + 1.0
        denom = ew * wp1 - (w + 2.0) * f / (2.0 * wp1)
        if denom == 0.0 or not math.isfinite(denom):
            break
        step = f / denom
        w -= step
        if abs(step) <= 4.0 * np.finfo(float).eps * (1.0 + abs(w)):
            break
    return max(w, -1.0)


@dataclass(frozen=True)
class MinimizeResult:
    argmin: float
    min_value: float
    iterations: int
    bracket_width: float


def minimize_unimodal(
    objective: Callable[[float], float],
    lo: float,
    hi: float,
    tol: float = 1e-8,
) -> MinimizeResult:
    """Golden-section search for the minimum of a unimodal function on [lo, hi].

    The returned ``argmin`` is the best abscissa actually evaluated, so
    ``min_value == objective(argmin)`` exactly. ``bracket_width`` is the
    width of the final bracket, which contains the true minimizer.

    Raises
    ------
    ValidationError
        If ``lo >= hi`` or ``tol <= 0``.
    EvaluationError
        If the objective returns a non-finite value; the offending abscissa
        is attached as ``.abscissa``.
    """
    lo, hi, tol = float(lo), float(hi), float(tol)
    if not (math.isfinite(lo) and math.isfinite(hi)) or lo >= hi:
        raise ValidationError(f"invalid bracket [{lo}, {hi}]")
    if not tol > 0:
        raise ValidationError(f"tolerance must be positive, got {tol}")

    def f(x):
        y = float(objective(x))
        if not math.isfinite(y):
            raise EvaluationError(f"objective is {y} at x={x!r}", abscissa=x)
        return y

    a, b = lo, hi
    h = b - a
    c = a + INV_PHI_SQ * h
    d = a + INV_PHI * h
    yc, yd = f(c), f(d)
    best_x, best_y = (c, yc) if yc <= yd else (d, yd)
    iterations = 0
    while b - a > tol:
        iterations += 1
        if yc <= yd:
            b, d, yd = d, c, yc
            h = b - a
            c = a + INV_PHI_SQ * h
            yc = f(c)
            if yc < best_y:
                best_x, best_y = c, yc
        else:
            a, c, yc = c, d, yd
            h = b - a
            d = a + INV_PHI * h
            yd = f(d)
            if yd < best_y:
                best_x, best_y = d, yd
    return MinimizeResult(best_x, best_y, iterations, b - a)
