"""Modified Bessel functions of integer order.

``K_0`` and ``K_1`` use the ascending series for ``x <= 2`` and Steed's
continued fraction (Temme's CF2 form) above; higher orders come from the
upward recurrence, which is stable for ``K``. ``I_m`` is summed from its
power series, which has no cancellation for positive arguments.

All functions accept scalars or arrays and support exponential scaling
(``K_m(x) e^x`` and ``I_m(x) e^{-x}``) so that products ``I_m K_m`` can be
formed for large arguments.
"""
import math

import numpy as np

from .errors import DomainError

EULER_GAMMA = 0.57721566490153286061
MAX_ORDER = 40
_SERIES_SWITCH = 2.0
_SERIES_TERMS = 24
_CF_MAXIT = 400
_EPS = 1e-16


def _check_x(x):
    x = np.asarray(x, dtype=float)
    if np.any(~(x > 0)):
        raise DomainError("modified Bessel K requires x > 0")
    return x


def _k01_series(x):
    # ascending series, accurate for 0 < x <= 2
    y = 0.25 * x * x
    lg = np.log(0.5 * x) + EULER_GAMMA
    i0 = np.ones_like(x)
    i1 = np.full_like(x, 0.5) * x
    term0 = np.ones_like(x)
    term1 = 0.5 * x
    harm = 0.0
    s0 = np.zeros_like(x)
    # psi(k+1) + psi(k+2) = 2 H_k + 1/(k+1) - 2 gamma
    s1 = (1.0 - 2.0 * EULER_GAMMA) * np.ones_like(x)
    t1 = np.ones_like(x)
    for k in range(1, _SERIES_TERMS):
        harm += 1.0 / k
        term0 = term0 * y / (k * k)
        i0 = i0 + term0
        s0 = s0 + harm * term0
        term1 = term1 * y / (k * (k + 1))
        i1 = i1 + term1
        t1 = t1 * y / (k * (k + 1))
        s1 = s1 + (2.0 * harm + 1.0 / (k + 1) - 2.0 * EULER_GAMMA) * t1
    k0 = -lg * i0 + s0
    k1 = 1.0 / x + np.log(0.5 * x) * i1 - 0.25 * x * s1
    return k0, k1


def _k01_cf2_scaled(x):
    # Steed's algorithm for CF2 at order 0; returns e^x K0, e^x K1
    b = 2.0 * (1.0 + x)
    d = 1.0 / b
    h = d.copy()
    delh = d.copy()
    q1 = np.zeros_like(x)
    q2 = np.ones_like(x)
    a1 = 0.25
    q = np.full_like(x, a1)
    c = np.full_like(x, a1)
    a = -a1
    s = 1.0 + q * delh
    done = np.zeros(x.shape, dtype=bool)
    for i in range(1, _CF_MAXIT + 1):
        a -= 2 * i
        c = -a * c / (i + 1.0)
        qnew = (q1 - b * q2) / a
        q1, q2 = q2, qnew
        q = q + c * qnew
        b = b + 2.0
        d = 1.0 / (b + a * d)
        delh = (b * d - 1.0) * delh
        h = np.where(done, h, h + delh)
        dels = q * delh
        s = np.where(done, s, s + dels)
        done |= np.abs(dels) < _EPS * np.abs(s)
        if done.all():
            break
    h = a1 * h
    k0 = np.sqrt(np.pi / (2.0 * x)) / s
    k1 = k0 * (x + 0.5 - h) / x
    return k0, k1


def _k01(x, scaled):
    k0 = np.empty_like(x)
    k1 = np.empty_like(x)
    small = x <= _SERIES_SWITCH
    if small.any():
        a, b = _k01_series(x[small])
        if scaled:
            e = np.exp(x[small])
            a, b = a * e, b * e
        k0[small], k1[small] = a, b
    big = ~small
    if big.any():
        a, b = _k01_cf2_scaled(x[big])
        if not scaled:
            e = np.exp(-x[big])
            a, b = a * e, b * e
        k0[big], k1[big] = a, b
    return k0, k1


def bessel_k(m, x, scaled=False):
    """Modified Bessel function of the second kind ``K_m(x)``.

    Parameters
    ----------
    m : int
        Order, ``0 <= m <= 40``.
    x : float or array_like
        Positive argument.
    scaled : bool
        Return ``K_m(x) * exp(x)`` instead.
    """
    m = int(m)
    if not 0 <= m <= MAX_ORDER:
        raise DomainError(f"order {m} outside 0..{MAX_ORDER}")
    xa = _check_x(x)
    shape = xa.shape
    xa = np.atleast_1d(xa).ravel()
    k0, k1 = _k01(xa, scaled)
    if m == 0:
        out = k0
    else:
        km, kk = k0, k1
        with np.errstate(over="ignore"):
            for n in range(1, m):
                km, kk = kk, km + (2.0 * n / xa) * kk
        out = kk
    out = out.reshape(shape)
    return float(out) if out.ndim == 0 else out


def k0(x):
    return bessel_k(0, x)


def k1(x):
    return bessel_k(1, x)


def bessel_i(m, x, scaled=False):
    """Modified Bessel function of the first kind ``I_m(x)`` for ``x >= 0``.

    Power series summed in a loop until the relative increment falls below
    machine precision; intended for ``x`` up to a few hundred.
    """
    m = int(m)
    if m < 0:
        raise DomainError("order must be nonnegative")
    xa = np.asarray(x, dtype=float)
    if np.any(xa < 0):
        raise DomainError("bessel_i requires x >= 0")
    shape = xa.shape
    xa = np.atleast_1d(xa).ravel()
    y = 0.25 * xa * xa
    if m == 0:
        logt0 = np.zeros_like(xa)
    else:
        with np.errstate(divide="ignore"):
            logt0 = m * np.log(0.5 * xa) - math.lgamma(m + 1.0)
    if scaled:
        logt0 = logt0 - xa
    term = np.exp(logt0)
    total = term.copy()
    k = 0
    while True:
        k += 1
        term = term * y / (k * (k + m))
        total += term
        if np.all(term <= _EPS * total) and k > 0.5 * float(xa.max(initial=0.0)):
            break
        if k > 5000:
            break
    total = total.reshape(shape)
    return float(total) if total.ndim == 0 else total


def ik_product(m, x):
    """``I_m(x) K_m(x)``, evaluated through the scaled functions."""
    return bessel_i(m, x, scaled=True) * bessel_k(m, x, scaled=True)
