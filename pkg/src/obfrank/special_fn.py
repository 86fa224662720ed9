"""Scalar special functions: principal-branch Lambert-W and the lower
incomplete gamma function.

Both are plain float -> float functions in 64-bit arithmetic.
"""

from __future__ import annotations

import math

__all__ = [
    "lambert_w0",
    "lambert_w0_of_exp",
    "lower_incomplete_gamma",
    "upper_incomplete_gamma",
    "gamma_switch_point",
]

_INV_E = math.exp(-1.0)
_EPS = 2.220446049250313e-16
_TINY = 1e-300
_MAX_ITER = 500


def lambert_w0(x: float) -> float:
    """Principal branch W0 of the Lambert-W function, ``W(x) exp(W(x)) = x``.

    Halley iteration. Starting point is ``x(1 - x)`` near the origin,
    ``log(1 + x)`` on the rest of the positive axis and the branch-point
    expansion for ``-1/e <= x < 0``.

    Raises
    ------
    ValueError
        If ``x < -1/e`` or ``x`` is not finite.
    """
    x = float(x)
    if not math.isfinite(x):
        raise ValueError(f"lambert_w0 needs a finite argument, got {x}")
    if x < -_INV_E:
        # allow the rounding of -1/e itself
        if x < -_INV_E * (1.0 + 4 * _EPS):
            raise ValueError(f"lambert_w0 undefined for x < -1/e, got {x}")
        return -1.0
    if x == 0.0:
        return 0.0
    if x < 0.0:
        q = 2.0 * (math.e * x + 1.0)
        w = -1.0 + math.sqrt(max(q, 0.0)) - q / 3.0
        if abs(x) < 0.1:
            w = x * (1.0 - x)
    elif x < 0.25:
        w = x * (1.0 - x)
    else:
        w = math.log1p(x)
        if x > math.e:
            lw = math.log(x)
            w = lw - math.log(lw)
    for _ in range(_MAX_ITER):
        ew = math.exp(w)
        f = w * ew - x
        wp1 = w + 1.0
        if wp1 == 0.0:
            break
        denom = ew * wp1 - (w + 2.0) * f / (2.0 * wp1)
        if denom == 0.0:
            break
        dw = f / denom
        w -= dw
        if abs(dw) <= 4 * _EPS * (1.0 + abs(w)):
            break
    return w


def lambert_w0_of_exp(y: float) -> float:
    """Return ``W0(exp(y))`` without forming ``exp(y)``.

    Solves ``w + log(w) = y`` by Newton iteration; usable for ``y`` far
    beyond the overflow limit of ``exp``.
    """
    y = float(y)
    if y < 1.0:
        return lambert_w0(math.exp(y))
    w = y - math.log(y)
    for _ in range(_MAX_ITER):
        f = w + math.log(w) - y
        dw = f / (1.0 + 1.0 / w)
        w -= dw
        if abs(dw) <= 4 * _EPS * w:
            break
    return w


def gamma_switch_point(a: float) -> float:
    """Abscissa where the incomplete gamma evaluation changes method."""
    return a + 1.0


def _log_prefactor(a: float, x: float) -> float:
    return a * math.log(x) - x


def _gamma_series(a: float, x: float) -> float:
    # x^a e^-x sum_n x^n / (a (a+1) ... (a+n))
    term = 1.0 / a
    total = term
    ap = a
    for _ in range(_MAX_ITER * 20):
        ap += 1.0
        term *= x / ap
        total += term
        if abs(term) < abs(total) * _EPS:
            return total * math.exp(_log_prefactor(a, x))
    raise ArithmeticError(f"incomplete gamma series did not converge (a={a}, x={x})")


def _upper_gamma_cf(a: float, x: float) -> float:
    # modified Lentz evaluation of the continued fraction for Gamma(a, x)
    b = x + 1.0 - a
    c = 1.0 / _TINY
    d = 1.0 / b
    h = d
    for i in range(1, _MAX_ITER * 20):
        an = -i * (i - a)
        b += 2.0
        d = an * d + b
        if abs(d) < _TINY:
            d = _TINY
        c = b + an / c
        if abs(c) < _TINY:
            c = _TINY
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < _EPS:
            return math.exp(_log_prefactor(a, x)) * h
    raise ArithmeticError(f"incomplete gamma fraction did not converge (a={a}, x={x})")


def _check_gamma_args(a: float, x: float) -> None:
    if not a > 0.0:
        raise ValueError(f"incomplete gamma needs a > 0, got a={a}")
    if not x >= 0.0:
        raise ValueError(f"incomplete gamma needs x >= 0, got x={x}")


def lower_incomplete_gamma(a: float, x: float, method: str = "auto") -> float:
    """Lower incomplete gamma ``integral_0^x t^(a-1) e^(-t) dt`` (not regularized).

    Parameters
    ----------
    a : float
        Shape, ``a > 0``.
    x : float
        Upper limit, ``x >= 0``; ``inf`` returns ``Gamma(a)``.
    method : {"auto", "series", "fraction"}
        ``auto`` uses the power series below ``a + 1`` and the continued
        fraction of the complement above it. The other two force one branch
        (used to check continuity at the switch point).
    """
    a = float(a)
    x = float(x)
    _check_gamma_args(a, x)
    if x == 0.0:
        return 0.0
    full = math.gamma(a)
    if math.isinf(x):
        return full
    if method == "auto":
        method = "series" if x < gamma_switch_point(a) else "fraction"
    if method == "series":
        return _gamma_series(a, x)
    if method == "fraction":
        return full - _upper_gamma_cf(a, x)
    raise ValueError(f"unknown method {method!r}")


def upper_incomplete_gamma(a: float, x: float) -> float:
    """Upper incomplete gamma ``Gamma(a) - lower_incomplete_gamma(a, x)``."""
    a = float(a)
    x = float(x)
    _check_gamma_args(a, x)
    if x == 0.0:
        return math.gamma(a)
    if math.isinf(x):
        return 0.0
    if x < gamma_switch_point(a):
        return math.gamma(a) - _gamma_series(a, x)
    return _upper_gamma_cf(a, x)
