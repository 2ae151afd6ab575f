"""Truncated power-series helpers.

Every series is a 1-d float array ``c`` holding the coefficients
``c[0] + c[1] z + ... + c[N] z^N``.  Nothing here evaluates a Gamma
function: the fractional-differencing weights and their derivatives in
``d`` come from two-term recursions, which stay finite for any length.
"""

from __future__ import annotations

import numpy as np
from numpy.typing import ArrayLike
from scipy import signal

CoeffSeq = np.ndarray

__all__ = [
    "CoeffSeq",
    "fracdiff_coeffs",
    "fracdiff_coeffs_dderiv",
    "fracdiff_coeffs_d2deriv",
    "fracdiff_derivs",
    "convolve",
    "poly_inverse",
    "log_one_minus_z",
    "identity_series",
    "shift",
]


def _check_len(N: int) -> int:
    N = int(N)
    if N < 0:
        raise ValueError(f"truncation index must be >= 0, got {N}")
    return N


def fracdiff_coeffs(d: float, N: int) -> CoeffSeq:
    """Coefficients of ``(1 - z)^d`` up to ``z^N``.

    Uses ``alpha_j = alpha_{j-1} (j - 1 - d) / j`` with ``alpha_0 = 1``.
    A negative ``d`` gives the fractional integration weights.
    """
    N = _check_len(N)
    d = float(d)
    if not np.isfinite(d):
        raise ValueError("d must be finite")
    j = np.arange(1, N + 1, dtype=float)
    out = np.empty(N + 1)
    out[0] = 1.0
    out[1:] = np.cumprod((j - 1.0 - d) / j)
    return out


def _near_nonneg_integer(d: float) -> bool:
    return d > -0.5 and abs(d - round(d)) < 1e-3


def _fracdiff_derivs_loop(d: float, N: int) -> tuple[CoeffSeq, CoeffSeq, CoeffSeq]:
    alpha = fracdiff_coeffs(d, N)
    d1 = np.zeros_like(alpha)
    d2 = np.zeros_like(alpha)
    for j in range(1, alpha.size):
        r = (j - 1 - d) / j
        d1[j] = d1[j - 1] * r - alpha[j - 1] / j
        d2[j] = d2[j - 1] * r - 2.0 * d1[j - 1] / j
    return alpha, d1, d2


def fracdiff_derivs(d: float, N: int) -> tuple[CoeffSeq, CoeffSeq, CoeffSeq]:
    """Weights of ``(1 - z)^d`` with their first and second ``d``-derivatives.

    The derivatives satisfy the differentiated recursions

        alpha'_j  = alpha'_{j-1} (j-1-d)/j - alpha_{j-1}/j
        alpha''_j = alpha''_{j-1} (j-1-d)/j - 2 alpha'_{j-1}/j

    Away from nonnegative integer ``d`` they are solved in closed form with
    cumulative sums (``alpha'_j = alpha_j S_j`` with
    ``S_j = -sum_{k<=j} 1/(k-1-d)``), which is the same quantity without a
    Python-level loop.  Near integer ``d`` some ``alpha_j`` vanish and the
    recursion is run directly.
    """
    N = _check_len(N)
    d = float(d)
    if _near_nonneg_integer(d):
        return _fracdiff_derivs_loop(d, N)
    alpha = fracdiff_coeffs(d, N)
    k = np.arange(1, N + 1, dtype=float)
    inv = 1.0 / (k - 1.0 - d)
    s1 = np.concatenate(([0.0], -np.cumsum(inv)))
    s2 = np.concatenate(([0.0], -np.cumsum(inv * inv)))
    return alpha, alpha * s1, alpha * (s1 * s1 + s2)


def fracdiff_coeffs_dderiv(d: float, N: int) -> CoeffSeq:
    """Entrywise derivative of :func:`fracdiff_coeffs` with respect to ``d``."""
    return fracdiff_derivs(d, N)[1]


def fracdiff_coeffs_d2deriv(d: float, N: int) -> CoeffSeq:
    """Second derivative in ``d`` of the fractional-differencing weights."""
    return fracdiff_derivs(d, N)[2]


def convolve(a: ArrayLike, b: ArrayLike, N: int) -> CoeffSeq:
    """Cauchy product of two series, truncated to ``N + 1`` terms.

    Inputs shorter than ``N + 1`` are treated as zero-padded.
    """
    N = _check_len(N)
    a = np.asarray(a, dtype=float)[: N + 1]
    b = np.asarray(b, dtype=float)[: N + 1]
    if a.size == 0 or b.size == 0:
        raise ValueError("both series need at least one coefficient")
    full = signal.convolve(a, b, method="direct" if min(a.size, b.size) < 64 else "auto")
    out = np.zeros(N + 1)
    k = min(full.size, N + 1)
    out[:k] = full[:k]
    return out


def poly_inverse(poly: ArrayLike, N: int) -> CoeffSeq:
    """Power-series reciprocal of a polynomial with unit constant term.

    Runs the forward recursion ``c_i = -sum_k poly_k c_{i-k}``, which is the
    impulse response of the all-pole filter ``1 / poly``.
    """
    N = _check_len(N)
    poly = np.atleast_1d(np.asarray(poly, dtype=float))
    if poly.size == 0 or poly[0] != 1.0:
        raise ValueError("poly_inverse needs a leading coefficient equal to 1")
    impulse = np.zeros(N + 1)
    impulse[0] = 1.0
    return signal.lfilter([1.0], poly, impulse)


def log_one_minus_z(N: int) -> CoeffSeq:
    """Coefficients of ``log(1 - z)``: 0, -1, -1/2, -1/3, ..."""
    N = _check_len(N)
    if N < 1:
        raise ValueError("log_one_minus_z needs N >= 1")
    out = np.zeros(N + 1)
    out[1:] = -1.0 / np.arange(1, N + 1)
    return out


def identity_series(N: int) -> CoeffSeq:
    out = np.zeros(_check_len(N) + 1)
    out[0] = 1.0
    return out


def shift(x: np.ndarray, k: int, axis: int = 0) -> np.ndarray:
    """Delay ``x`` by ``k`` steps along ``axis``, filling with zeros (``z^k x``)."""
    x = np.asarray(x, dtype=float)
    out = np.zeros_like(x)
    if k <= 0:
        if k == 0:
            out[...] = x
            return out
        raise ValueError("shift only delays (k >= 0)")
    n = x.shape[axis]
    if k >= n:
        return out
    src = [slice(None)] * x.ndim
    dst = [slice(None)] * x.ndim
    src[axis] = slice(0, n - k)
    dst[axis] = slice(k, n)
    out[tuple(dst)] = x[tuple(src)]
    return out
