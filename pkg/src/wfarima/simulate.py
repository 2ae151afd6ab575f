"""Noise generation and FARIMA path simulation.

Paths are built from the truncated MA(inf) representation
``X_t = sum_{i < t + burnin} eta_i(theta) eps_{t-i}``, with the first
``burnin`` values dropped.

Random streams are split so that the noise inside the observation window
depends only on the seed, not on the burn-in length: the window draws from
one child stream and the presample is drawn backwards in time from another.
Lengthening the burn-in therefore only extends the past of the same path.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Literal

import numpy as np

from .errors import InvalidParameterError
from .model import ParamVector, ar_poly, ma_poly, min_root_modulus
from .residuals import causal_filter
from .series import CoeffSeq, convolve, fracdiff_coeffs, poly_inverse

__all__ = [
    "NoiseSpec",
    "SimConfig",
    "derive_seed",
    "gen_noise",
    "ma_inf_coeffs",
    "simulate_farima",
]

NoiseKind = Literal["strong_gaussian", "weak_product"]


def derive_seed(master_seed: int, index: int) -> int:
    """64-bit seed for replication ``index`` of an experiment."""
    ss = np.random.SeedSequence([int(master_seed), int(index)])
    return int(ss.generate_state(1, dtype=np.uint64)[0])


@dataclass(frozen=True)
class NoiseSpec:
    """Innovation law.

    ``strong_gaussian`` draws iid ``N(0, sigma^2)``.  ``weak_product`` draws
    ``eps_t = eta_t^2 eta_{t-1}`` with iid ``eta ~ N(0, sigma^2)``: the result
    is uncorrelated but dependent, with variance ``3 sigma^6``.
    """

    kind: NoiseKind = "strong_gaussian"
    sigma: float = 1.0
    seed: int = 0

    def __post_init__(self):
        if self.kind not in ("strong_gaussian", "weak_product"):
            raise ValueError(f"unknown noise kind {self.kind!r}")
        if not self.sigma > 0:
            raise ValueError("sigma must be positive")

    @property
    def variance(self) -> float:
        return self.sigma**2 if self.kind == "strong_gaussian" else 3.0 * self.sigma**6


@dataclass(frozen=True)
class SimConfig:
    theta0: ParamVector
    n: int
    burnin: int = 1000
    noise: NoiseSpec = field(default_factory=NoiseSpec)

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("n must be >= 1")
        if self.burnin < 0:
            raise ValueError("burnin must be >= 0")


def _streams(seed: int) -> tuple[np.random.Generator, np.random.Generator]:
    window, past = np.random.SeedSequence(int(seed)).spawn(2)
    return np.random.default_rng(window), np.random.default_rng(past)


def gen_noise(spec: NoiseSpec, length: int, presample: int = 0) -> np.ndarray:
    """Draw ``presample + length`` innovations in time order.

    The last ``length`` values (the window) are identical for every
    ``presample``; the presample values are the window's past.
    """
    if length < 1:
        raise ValueError("length must be >= 1")
    if presample < 0:
        raise ValueError("presample must be >= 0")
    win_rng, past_rng = _streams(spec.seed)
    if spec.kind == "strong_gaussian":
        window = win_rng.normal(0.0, spec.sigma, length)
        past = past_rng.normal(0.0, spec.sigma, presample)[::-1]
        return np.concatenate([past, window])
    # one extra eta before the first innovation
    window = win_rng.normal(0.0, spec.sigma, length)
    past = past_rng.normal(0.0, spec.sigma, presample + 1)[::-1]
    eta = np.concatenate([past, window])
    return eta[1:] ** 2 * eta[:-1]


def ma_inf_coeffs(theta: ParamVector, N: int) -> CoeffSeq:
    """MA(inf) weights: coefficients of ``(1 - z)^{-d} a(z)^{-1} b(z)`` up to ``z^N``."""
    arma = convolve(poly_inverse(ar_poly(theta), N), ma_poly(theta), N)
    return convolve(fracdiff_coeffs(-theta.d, N), arma, N)


def check_simulable(theta: ParamVector) -> None:
    """Require a stationary, invertible model with ``|d| < 1/2``."""
    if min_root_modulus(ar_poly(theta)) <= 1.0:
        raise InvalidParameterError("AR polynomial has a root on or inside the unit circle")
    if min_root_modulus(ma_poly(theta)) <= 1.0:
        raise InvalidParameterError("MA polynomial has a root on or inside the unit circle")
    if not -0.5 < theta.d < 0.5:
        raise InvalidParameterError(f"d must lie in (-1/2, 1/2), got {theta.d}")


def simulate_farima(cfg: SimConfig, return_noise: bool = False):
    """Simulate ``cfg.n`` observations of the FARIMA model ``cfg.theta0``.

    Returns the path, or ``(path, innovations)`` restricted to the window
    when ``return_noise`` is set.
    """
    check_simulable(cfg.theta0)
    total = cfg.burnin + cfg.n
    eps = gen_noise(cfg.noise, cfg.n, presample=cfg.burnin)
    weights = ma_inf_coeffs(cfg.theta0, total - 1)
    (x,) = causal_filter(eps, [weights])
    x = x[cfg.burnin :]
    if return_noise:
        return x, eps[cfg.burnin :]
    return x
