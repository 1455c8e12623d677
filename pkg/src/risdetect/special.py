"""Marcum Q function of order one and the Gaussian Q function."""
from __future__ import annotations

import numpy as np
from scipy import integrate, special

# beyond this value of a*b the Bessel series gets long; integrate instead
_SERIES_LIMIT = 1e6


def gaussian_q(x):
    """Gaussian tail probability ``P(N(0,1) > x)``."""
    out = 0.5 * special.erfc(np.asarray(x, dtype=float) / np.sqrt(2.0))
    return float(out) if np.ndim(out) == 0 else out


def _marcum_series(a, b):
    # exp(-(a^2+b^2)/2) I_k(ab) == exp(-(a-b)^2/2) ive(k, ab)
    x = a * b
    n = int(10.0 * np.sqrt(x) + 40)
    pre = np.exp(-0.5 * (a - b) ** 2)
    if b >= a:
        k = np.arange(n)
        terms = (a / b) ** k * special.ive(k, x)
        return float(pre * terms[::-1].sum())
    k = np.arange(1, n)
    terms = (b / a) ** k * special.ive(k, x)
    return float(1.0 - pre * terms[::-1].sum())


def _marcum_quad(a, b):
    def f(t):
        return t * np.exp(-0.5 * (t - a) ** 2) * special.i0e(a * t)

    if b >= a:
        val, _ = integrate.quad(f, b, b + 40.0, epsabs=1e-14, epsrel=1e-12, limit=200)
        return val
    val, _ = integrate.quad(f, b, a + 40.0, points=[a], epsabs=1e-14, epsrel=1e-12,
                            limit=200)
    return val


def _marcum_scalar(a, b):
    if not (np.isfinite(a) and np.isfinite(b)):
        raise ValueError("Marcum Q arguments must be finite")
    if a < 0 or b < 0:
        raise ValueError(f"Marcum Q needs a, b >= 0, got ({a}, {b})")
    if b == 0.0:
        return 1.0
    if a == 0.0:
        return float(np.exp(-0.5 * b * b))
    if a * b > _SERIES_LIMIT:
        return min(1.0, max(0.0, _marcum_quad(a, b)))
    return min(1.0, max(0.0, _marcum_series(a, b)))


def marcum_q1(a, b):
    """First-order Marcum Q function ``Q_1(a, b)``.

    Evaluated from the Neumann series in exponentially scaled Bessel
    functions, summing the ``(a/b)^k`` form for ``b >= a`` and the
    complementary ``(b/a)^k`` form otherwise, so all terms are positive and
    decreasing. Broadcasts over array inputs.
    """
    a_arr, b_arr = np.broadcast_arrays(np.asarray(a, dtype=float), np.asarray(b, dtype=float))
    if a_arr.ndim == 0:
        return _marcum_scalar(float(a_arr), float(b_arr))
    out = np.empty(a_arr.shape)
    for idx in np.ndindex(a_arr.shape):
        out[idx] = _marcum_scalar(a_arr[idx], b_arr[idx])
    return out
