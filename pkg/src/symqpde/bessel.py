"""Bessel functions J0, J1 and zeros of J0, with no external dependencies.

Evaluation strategy: the ascending power series for |x| <= 8 (summed until
terms vanish at machine precision, so this region is exact to roundoff),
and the Hankel large-argument expansion with six correction coefficients
beyond.  The truncated Hankel tail is an asymptotic series: its error is
~2e-7 just above the switchover and falls off like x^-7, reaching 1e-12
only for x of a few tens.  Zeros are refined by Newton iteration on these
evaluations, so they are exact zeros of *this* J0 (|J0(zero)| < 1e-13)
even where the evaluation itself carries the asymptotic bias.
"""

from __future__ import annotations

import numpy as np

from .errors import NumericIntegrityError

_SERIES_CUTOFF = 8.0
_ZERO_TOL = 1e-13
_MAX_NEWTON = 100


def _j0_series(x):
    x2 = -0.25 * x * x
    term = 1.0
    acc = 1.0
    k = 1
    while True:
        term *= x2 / (k * k)
        acc += term
        if abs(term) <= 1e-17 * max(1.0, abs(acc)):
            return acc
        k += 1


def _j1_series(x):
    x2 = -0.25 * x * x
    term = 1.0
    acc = 1.0
    k = 1
    while True:
        term *= x2 / (k * (k + 1))
        acc += term
        if abs(term) <= 1e-17 * max(1.0, abs(acc)):
            return 0.5 * x * acc
        k += 1


def _hankel_coeffs(nu):
    mu = 4.0 * nu * nu
    c = [1.0]
    for k in range(1, 6):
        c.append(c[-1] * (mu - (2 * k - 1) ** 2) / (8.0 * k))
    return c


_C0 = _hankel_coeffs(0)
_C1 = _hankel_coeffs(1)


def _hankel(x, c, chi_shift):
    inv = 1.0 / x
    p = c[0] - c[2] * inv * inv + c[4] * inv ** 4
    q = c[1] * inv - c[3] * inv ** 3 + c[5] * inv ** 5
    chi = x - chi_shift
    return np.sqrt(2.0 / (np.pi * x)) * (p * np.cos(chi) - q * np.sin(chi))


def bessel_j0(x):
    """J0 at a real scalar argument."""
    x = abs(float(x))  # J0 is even
    if x <= _SERIES_CUTOFF:
        return _j0_series(x)
    return _hankel(x, _C0, 0.25 * np.pi)


def bessel_j1(x):
    """J1 at a real scalar argument."""
    ax = abs(float(x))
    sign = 1.0 if x >= 0 else -1.0  # J1 is odd
    if ax <= _SERIES_CUTOFF:
        return sign * _j1_series(ax)
    return sign * _hankel(ax, _C1, 0.75 * np.pi)


def bessel_j0_zeros(m):
    """The first m positive zeros of J0, each refined by Newton iteration
    until |J0| < 1e-13.  Limited to m <= 50."""
    m = int(m)
    if not 1 <= m <= 50:
        raise ValueError(f"zero count must be in 1..50, got {m}")
    zeros = []
    for n in range(1, m + 1):
        beta = (n - 0.25) * np.pi
        alpha = beta + 1.0 / (8.0 * beta)
        for _ in range(_MAX_NEWTON):
            f = bessel_j0(alpha)
            if abs(f) < _ZERO_TOL:
                break
            alpha += f / bessel_j1(alpha)  # J0' = -J1
        else:
            raise NumericIntegrityError(
                f"zero {n} of J0 did not converge below {_ZERO_TOL}")
        zeros.append(alpha)
    return zeros
