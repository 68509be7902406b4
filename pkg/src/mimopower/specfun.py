"""Special functions used by the outage engines.

Regularized incomplete gamma functions, the Gaussian tail ``Q`` and its
inverse, and the exponential integral ``E1``.  Scalar kernels use only the
standard library; ``qfunc`` additionally accepts numpy arrays because the
MIMO engine evaluates it over whole grids.
"""

import math

import numpy as np
from scipy import special

__all__ = [
    "gamma_lower_reg",
    "gamma_upper_reg",
    "qfunc",
    "qfunc_inv",
    "expint_e1",
]

EULER_GAMMA = 0.57721566490153286061
SQRT2 = math.sqrt(2.0)

_EPS = 1e-15
_TINY = 1e-300
_MAX_ITER = 10_000


def _check_gamma_args(a, x):
    if not a > 0:
        raise ValueError(f"gamma shape must be positive, got a={a!r}")
    if not x >= 0:
        raise ValueError(f"gamma argument must be nonnegative, got x={x!r}")


def _gamma_series(a, x):
    # P(a, x) by its power series; converges fast for x < a + 1
    term = 1.0 / a
    total = term
    ap = a
    for _ in range(_MAX_ITER):
        ap += 1.0
        term *= x / ap
        total += term
        if abs(term) < abs(total) * _EPS:
            break
    else:
        raise ArithmeticError(f"incomplete gamma series did not converge (a={a}, x={x})")
    return total * math.exp(-x + a * math.log(x) - math.lgamma(a))


def _gamma_cfrac(a, x):
    # Q(a, x) by modified Lentz evaluation of the continued fraction, x >= a + 1
    b = x + 1.0 - a
    c = 1.0 / _TINY
    d = 1.0 / b
    h = d
    for i in range(1, _MAX_ITER):
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
            break
    else:
        raise ArithmeticError(f"incomplete gamma fraction did not converge (a={a}, x={x})")
    return math.exp(-x + a * math.log(x) - math.lgamma(a)) * h


def gamma_lower_reg(a, x):
    """Regularized lower incomplete gamma ``P(a, x) = γ(a, x) / Γ(a)``.

    This is the CDF at ``x`` of a Gamma(a, 1) variable.
    """
    _check_gamma_args(a, x)
    if x == 0:
        return 0.0
    if math.isinf(x):
        return 1.0
    if x < a + 1.0:
        return min(1.0, _gamma_series(a, x))
    return max(0.0, 1.0 - _gamma_cfrac(a, x))


def gamma_upper_reg(a, x):
    """Regularized upper incomplete gamma ``Q(a, x) = 1 - P(a, x)``.

    Computed directly in the tail so small values keep relative accuracy.
    """
    _check_gamma_args(a, x)
    if x == 0:
        return 1.0
    if math.isinf(x):
        return 0.0
    if x < a + 1.0:
        return max(0.0, 1.0 - _gamma_series(a, x))
    return min(1.0, _gamma_cfrac(a, x))


def qfunc(x):
    """Standard normal tail probability ``P(Z > x)``.

    Works elementwise on arrays; returns a float for scalar input.
    """
    if np.ndim(x) == 0:
        return 0.5 * math.erfc(float(x) / SQRT2)
    return 0.5 * special.erfc(np.asarray(x, dtype=float) / SQRT2)


def _normal_pdf(x):
    return math.exp(-0.5 * x * x) / math.sqrt(2.0 * math.pi)


def qfunc_inv(p):
    """Inverse of :func:`qfunc` on the open interval ``(0, 1)``.

    Safeguarded Newton iteration on ``log Q`` inside a bisection bracket.
    Upper-half probabilities are reflected, ``Q^-1(p) = -Q^-1(1 - p)``,
    which is exact in floating point for ``p >= 0.5``.
    """
    if not 0.0 < p < 1.0:
        raise ValueError(f"qfunc_inv needs 0 < p < 1, got p={p!r}")
    if p > 0.5:
        return -qfunc_inv(1.0 - p)
    if p == 0.5:
        return 0.0

    target = math.log(p)
    lo, hi = 0.0, 40.0
    x = math.sqrt(-2.0 * target)  # tail asymptote, always inside the bracket
    for _ in range(200):
        q = qfunc(x)
        f = math.log(q) - target if q > 0 else -math.inf
        if f > 0:
            lo = x
        else:
            hi = x
        if f == 0 or hi - lo < 1e-15 * max(1.0, x):
            break
        # d/dx log Q(x) = -phi(x) / Q(x)
        slope = -_normal_pdf(x) / q if q > 0 else -math.inf
        step = x - f / slope if math.isfinite(slope) and slope != 0 else math.nan
        if step <= lo or step >= hi or not math.isfinite(step):
            step = 0.5 * (lo + hi)
        if abs(step - x) < 1e-15 * max(1.0, abs(x)):
            x = step
            break
        x = step
    return x


def expint_e1(x):
    """Exponential integral ``E1(x) = ∫_x^∞ e^-t / t dt`` for ``x > 0``.

    Power series below 1, continued fraction above.
    """
    if not x > 0:
        raise ValueError(f"expint_e1 needs x > 0, got x={x!r}")
    if math.isinf(x):
        return 0.0
    if x <= 1.0:
        total = 0.0
        term = 1.0
        for n in range(1, _MAX_ITER):
            term *= -x / n
            contrib = -term / n
            total += contrib
            if abs(contrib) < abs(total) * _EPS:
                break
        return -EULER_GAMMA - math.log(x) + total
    b = x + 1.0
    c = 1.0 / _TINY
    d = 1.0 / b
    h = d
    for i in range(1, _MAX_ITER):
        an = -i * i
        b += 2.0
        d = 1.0 / (an * d + b)
        c = b + an / c
        delta = c * d
        h *= delta
        if abs(delta - 1.0) < _EPS:
            break
    else:
        raise ArithmeticError(f"E1 continued fraction did not converge (x={x})")
    return h * math.exp(-x)
