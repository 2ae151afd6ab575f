"""Truncated FARIMA residuals and their parameter derivatives.

With a zero presample, the residual recursion

    e_t = sum_{j<t} alpha_j(d) X_{t-j}
          - sum_i a_i sum_{j<t-i} alpha_j(d) X_{t-i-j}
          + sum_j b_j e_{t-j}

factors as ``e = (a(L) / b(L)) y`` where ``y_t = sum_{j<t} alpha_j X_{t-j}``
is the truncated fractional difference of the data.  The fractional sums are
computed once per evaluation by FFT; everything else is a short IIR filter
started from zero state, so derivatives with respect to the ARMA block are
delayed copies of a handful of filtered series.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np
from numpy.typing import ArrayLike
from scipy import fft, signal

from .model import ParamVector, ar_poly, ma_poly
from .series import CoeffSeq, convolve, fracdiff_coeffs, fracdiff_derivs, poly_inverse, shift

__all__ = ["ResidualEval", "as_series", "compute_residuals", "ar_inf_coeffs", "causal_filter"]

_DIRECT_MAX = 256


@dataclass
class ResidualEval:
    """Residuals ``eps`` (n,), gradient rows ``grad`` (n, k) and optionally
    second derivatives ``hess`` (n, k, k)."""

    eps: np.ndarray
    grad: Optional[np.ndarray] = None
    hess: Optional[np.ndarray] = None


def as_series(x: ArrayLike) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if x.ndim != 1:
        raise ValueError(f"series must be one-dimensional, got shape {x.shape}")
    if x.size < 1:
        raise ValueError("series must contain at least one observation")
    if not np.all(np.isfinite(x)):
        raise ValueError("series contains NaN or infinite values")
    return x


def causal_filter(x: np.ndarray, kernels: list[np.ndarray]) -> list[np.ndarray]:
    """Truncated causal convolutions ``sum_{j<t} k_j x_{t-j}`` for several kernels.

    Each kernel must have length ``len(x)``.  Short inputs and kernels that
    are zero beyond a few lags are convolved directly (exact for an identity
    kernel); the rest share one FFT of ``x``.
    """
    n = x.size
    out = [None] * len(kernels)
    xf = nfft = None
    for i, k in enumerate(kernels):
        support = np.flatnonzero(k)
        if n <= _DIRECT_MAX or support.size == 0 or support[-1] < _DIRECT_MAX // 4:
            out[i] = np.convolve(x, k[: (support[-1] + 1) if support.size else 1])[:n]
            continue
        if xf is None:
            nfft = fft.next_fast_len(2 * n - 1, real=True)
            xf = fft.rfft(x, nfft)
        out[i] = fft.irfft(xf * fft.rfft(k, nfft), nfft)[:n]
    return out


def compute_residuals(
    theta: ParamVector, data: ArrayLike, want_hessian: bool = False, want_grad: bool = True
) -> ResidualEval:
    """Evaluate truncated residuals and their derivatives at ``theta``.

    Parameters
    ----------
    theta : ParamVector
        Point ``(a_1..a_p, b_1..b_q, d)``.
    data : array_like
        Observations ``X_1..X_n`` (assumed centered).
    want_hessian : bool
        Also return the ``(n, k, k)`` array of second derivatives.
    want_grad : bool
        Return the ``(n, k)`` gradient rows.  Implied by ``want_hessian``.
    """
    if not isinstance(theta, ParamVector):
        raise TypeError("theta must be a ParamVector")
    x = as_series(data)
    n = x.size
    p, q = theta.ar.size, theta.ma.size
    k = p + q + 1
    apoly, bpoly = ar_poly(theta), ma_poly(theta)
    want_grad = want_grad or want_hessian

    if not want_grad:
        (y,) = causal_filter(x, [fracdiff_coeffs(theta.d, n - 1)])
        return ResidualEval(signal.lfilter(apoly, bpoly, y))

    alpha, alpha_d, alpha_dd = fracdiff_derivs(theta.d, n - 1)
    kernels = [alpha, alpha_d] + ([alpha_dd] if want_hessian else [])
    y, yd, *rest = causal_filter(x, kernels)

    eps = signal.lfilter(apoly, bpoly, y)
    w = signal.lfilter([1.0], bpoly, y)
    v = signal.lfilter([1.0], bpoly, eps)
    gd = signal.lfilter(apoly, bpoly, yd)

    grad = np.empty((n, k))
    for i in range(1, p + 1):
        grad[:, i - 1] = -shift(w, i)
    for j in range(1, q + 1):
        grad[:, p + j - 1] = shift(v, j)
    grad[:, -1] = gd

    hess = None
    if want_hessian:
        (ydd,) = rest
        hess = np.zeros((n, k, k))
        ww = signal.lfilter([1.0], bpoly, w)
        wd = signal.lfilter([1.0], bpoly, yd)
        vv = signal.lfilter([1.0], bpoly, v)
        vd = signal.lfilter([1.0], bpoly, gd)
        for i in range(1, p + 1):
            ai = i - 1
            for j in range(1, q + 1):
                bj = p + j - 1
                hess[:, ai, bj] = hess[:, bj, ai] = -shift(ww, i + j)
            hess[:, ai, -1] = hess[:, -1, ai] = -shift(wd, i)
        for j in range(1, q + 1):
            bj = p + j - 1
            for l in range(j, q + 1):
                bl = p + l - 1
                hess[:, bj, bl] = hess[:, bl, bj] = 2.0 * shift(vv, j + l)
            hess[:, bj, -1] = hess[:, -1, bj] = shift(vd, j)
        hess[:, -1, -1] = signal.lfilter(apoly, bpoly, ydd)

    return ResidualEval(eps, grad, hess)


def ar_inf_coeffs(theta: ParamVector, N: int) -> CoeffSeq:
    """AR(inf) weights: coefficients of ``b(z)^{-1} a(z) (1 - z)^d`` up to ``z^N``."""
    frac = fracdiff_coeffs(theta.d, N)
    return convolve(poly_inverse(ma_poly(theta), N), convolve(ar_poly(theta), frac, N), N)
