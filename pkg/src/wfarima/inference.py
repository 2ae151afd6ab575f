"""Least-squares and one-step estimation of FARIMA(p, d, q) models.

The criterion is ``Q_n(theta) = n^{-1} sum_t e_t(theta)^2`` over the
truncated residuals.  The one-step estimator starts from the least-squares
fit on the first ``m = floor(n^delta)`` observations and takes a single
Newton step on the full-sample criterion, with one of three curvature
matrices:

``full_hessian``
    exact second derivative of ``Q_n``;
``outer_product``
    ``2/n sum_t grad e_t grad e_t'`` (drops the residual-weighted term);
``closed_form``
    the limit curvature ``J(theta)`` computed from the model's power
    series with ``sigma^2 = Q_n(theta)``.

Standard errors come from the sandwich ``J^{-1} I J^{-1}`` where ``I`` is a
Bartlett-kernel long-run covariance of the score rows
``H_t = 2 e_t grad e_t``, so they stay valid for uncorrelated but dependent
innovations.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from typing import Literal, Optional, Sequence, Union

import numpy as np
from numpy.typing import ArrayLike
from scipy import linalg, optimize
from scipy.special import comb

from .errors import (
    ConvergenceError,
    DegenerateInputError,
    InvalidParameterError,
    NearSingularCurvatureError,
)
from .model import ModelOrder, ParamSpace, ParamVector, ar_poly, check_valid, ma_poly, min_root_modulus, validate
from .residuals import as_series, compute_residuals
from .series import poly_inverse

__all__ = [
    "CURVATURE_MODES",
    "FitOptions",
    "FitResult",
    "ObjectiveEval",
    "closed_form_J",
    "hac_I",
    "lse_fit",
    "objective",
    "onestep_fit",
    "sandwich_cov",
    "score_sequence",
    "subsample_lse",
    "subsample_size",
]

CurvatureMode = Literal["full_hessian", "outer_product", "closed_form"]
CURVATURE_MODES = ("full_hessian", "outer_product", "closed_form")
MIN_FIT_LENGTH = 50
MAX_CONDITION = 1e12


@dataclass
class ObjectiveEval:
    value: float
    grad: np.ndarray
    curvature: Optional[np.ndarray]
    mode: Optional[str]


@dataclass
class FitOptions:
    """Tuning knobs for the optimizer and the covariance estimate.

    The defaults reproduce the documented pipeline; every fit with the same
    data and options is deterministic.
    """

    start_ds: Sequence[float] = (0.1, 0.2, 0.3, 0.4)
    random_starts: int = 1
    seed: int = 0
    maxiter: int = 1000
    gtol: float = 1e-6
    barrier_mu: float = 1e-4
    barrier_band: float = 0.05
    bandwidth: Union[int, str] = "auto"
    closed_form_N: int = 100_000
    cov_curvature: CurvatureMode = "outer_product"


@dataclass
class FitResult:
    theta_hat: ParamVector
    sigma2_hat: float
    curvature_used: np.ndarray
    curvature_mode: str
    I_hat: np.ndarray
    omega_hat: np.ndarray
    std_errors: np.ndarray
    method: str
    n: int
    m_used: int
    wall_time: float
    converged: bool = True
    feasible: bool = True
    theta_init: Optional[ParamVector] = None
    grad_norm: float = float("nan")
    omega_strong: Optional[np.ndarray] = None
    warnings: list[str] = field(default_factory=list)

    def to_dict(self) -> dict:
        """JSON-ready document (see README for field meanings and units)."""
        order = self.theta_hat.order
        return {
            "method": self.method,
            "p": order.p,
            "q": order.q,
            "theta": self.theta_hat.flat.tolist(),
            "std_errors": self.std_errors.tolist(),
            "sigma2": self.sigma2_hat,
            "curvature_mode": self.curvature_mode,
            "curvature": self.curvature_used.tolist(),
            "I_hat": self.I_hat.tolist(),
            "omega": self.omega_hat.tolist(),
            "omega_strong": None if self.omega_strong is None else self.omega_strong.tolist(),
            "n": self.n,
            "m_used": self.m_used,
            "wall_time": self.wall_time,
            "converged": self.converged,
            "feasible": self.feasible,
            "theta_init": None if self.theta_init is None else self.theta_init.flat.tolist(),
            "warnings": list(self.warnings),
        }


# ---------------------------------------------------------------------------
# criterion and curvature


def _as_theta(theta, order: Optional[ModelOrder] = None) -> ParamVector:
    if isinstance(theta, ParamVector):
        if order is not None and theta.order != order:
            raise InvalidParameterError("parameter vector does not match the model order")
        return theta
    if order is None:
        raise InvalidParameterError("a flat parameter array needs an explicit order")
    return ParamVector.from_flat(theta, order)


def _stable(theta: ParamVector) -> bool:
    return (
        min_root_modulus(ar_poly(theta)) > 1.0
        and min_root_modulus(ma_poly(theta)) > 1.0
        and -0.5 < theta.d < 0.5
    )


def closed_form_J(theta: ParamVector, sigma2: float, N: int = 100_000) -> np.ndarray:
    """Limit curvature ``J(theta) = 2 sigma^2 sum_{i=1}^N l_i l_i'``.

    The coefficient columns ``l`` are: for AR lag k, the coefficients of
    ``-z^k / a(z)``; for MA lag k, those of ``z^k / b(z)``; for ``d``,
    those of ``log(1 - z)``, i.e. ``-1/i``.
    """
    if not sigma2 > 0 or not np.isfinite(sigma2):
        raise InvalidParameterError("sigma2 must be a finite positive number")
    if not _stable(theta):
        raise InvalidParameterError("closed-form J needs AR and MA roots outside the unit circle and |d| < 1/2")
    N = int(N)
    if N < 1:
        raise InvalidParameterError("N must be >= 1")
    p, q = theta.ar.size, theta.ma.size
    ainv = poly_inverse(ar_poly(theta), N)
    binv = poly_inverse(ma_poly(theta), N)
    cols = np.zeros((N, p + q + 1))
    # row r holds coefficient i = r + 1
    for k in range(1, p + 1):
        cols[k - 1 :, k - 1] = -ainv[: N - k + 1]
    for k in range(1, q + 1):
        cols[k - 1 :, p + k - 1] = binv[: N - k + 1]
    cols[:, -1] = -1.0 / np.arange(1, N + 1)
    J = 2.0 * sigma2 * (cols.T @ cols)
    return 0.5 * (J + J.T)


def objective(
    theta,
    data: ArrayLike,
    mode: Optional[CurvatureMode] = "outer_product",
    order: Optional[ModelOrder] = None,
    closed_form_N: int = 100_000,
) -> ObjectiveEval:
    """Value, gradient and (optionally) curvature of ``Q_n`` at ``theta``.

    ``mode=None`` skips the curvature.
    """
    theta = _as_theta(theta, order)
    if mode is not None and mode not in CURVATURE_MODES:
        raise InvalidParameterError(f"unknown curvature mode {mode!r}")
    x = as_series(data)
    n = x.size
    res = compute_residuals(theta, x, want_hessian=(mode == "full_hessian"))
    eps, g = res.eps, res.grad
    value = float(eps @ eps) / n
    grad = 2.0 * (g.T @ eps) / n
    curv = None
    if mode == "outer_product":
        curv = 2.0 * (g.T @ g) / n
    elif mode == "full_hessian":
        curv = 2.0 * (g.T @ g + np.einsum("t,tkl->kl", eps, res.hess)) / n
    elif mode == "closed_form":
        curv = closed_form_J(theta, value, closed_form_N)
    if curv is not None:
        curv = 0.5 * (curv + curv.T)
    return ObjectiveEval(value, grad, curv, mode)


def score_sequence(theta: ParamVector, data: ArrayLike) -> np.ndarray:
    """Rows ``H_t = 2 e_t grad e_t`` of the score sequence, shape ``(n, k)``."""
    res = compute_residuals(theta, data)
    return 2.0 * res.eps[:, None] * res.grad


def hac_I(scores: ArrayLike, bandwidth: Union[int, str] = "auto") -> np.ndarray:
    """Bartlett-kernel long-run covariance of the score rows.

    ``I = G_0 + sum_{k=1}^h (1 - k/(h+1)) (G_k + G_k')`` with
    ``G_k = n^{-1} sum_t H_t H_{t-k}'`` (uncentered: scores have mean zero
    at the true parameter).  ``bandwidth='auto'`` uses ``floor(n^{1/3})``.
    The result is symmetrized and its negative eigenvalues are set to zero.
    """
    H = np.asarray(scores, dtype=float)
    if H.ndim == 1:
        H = H[:, None]
    n = H.shape[0]
    if bandwidth == "auto":
        h = int(math.floor(n ** (1.0 / 3.0) + 1e-9))
    else:
        h = int(bandwidth)
        if h < 0:
            raise ValueError("bandwidth must be nonnegative")
    if h >= n:
        raise ValueError(f"bandwidth {h} must be smaller than the sample size {n}")
    if n < 2 * h:
        raise ValueError(f"sample size {n} must be at least twice the bandwidth {h}")
    out = H.T @ H / n
    for k in range(1, h + 1):
        gk = H[k:].T @ H[:-k] / n
        out += (1.0 - k / (h + 1.0)) * (gk + gk.T)
    out = 0.5 * (out + out.T)
    w, v = np.linalg.eigh(out)
    if np.any(w < 0):
        out = (v * np.clip(w, 0.0, None)) @ v.T
        out = 0.5 * (out + out.T)
    return out


def sandwich_cov(J: ArrayLike, I: ArrayLike) -> np.ndarray:
    """``J^{-1} I J^{-1}`` via two symmetric solves."""
    J = np.atleast_2d(np.asarray(J, dtype=float))
    I = np.atleast_2d(np.asarray(I, dtype=float))
    if J.shape != I.shape or J.shape[0] != J.shape[1]:
        raise ValueError("J and I must be square matrices of equal size")
    if not np.all(np.isfinite(J)) or np.linalg.cond(J) > 1e14:
        raise linalg.LinAlgError("J is singular")
    A = linalg.solve(J, I, assume_a="sym")
    omega = linalg.solve(J, A.T, assume_a="sym").T
    return 0.5 * (omega + omega.T)


# ---------------------------------------------------------------------------
# least squares


def _coef_bounds(deg: int, R: float) -> list[tuple[float, float]]:
    # |coefficient of z^i| <= C(deg, i) / R^i when every root has modulus >= R
    return [(-comb(deg, i) / R**i, comb(deg, i) / R**i) for i in range(1, deg + 1)]


class _Criterion:
    """``Q_m / scale`` plus a soft barrier keeping AR/MA roots off the margin.

    The barrier only acts for polynomial degree >= 2 (degree-1 constraints
    are exact box bounds) and is zero unless a root comes within
    ``band`` of the margin ``1 + kappa``.
    """

    def __init__(self, x, order: ModelOrder, space: ParamSpace, opts: FitOptions):
        self.x = x
        self.order = order
        self.space = space
        self.scale = float(x @ x) / x.size
        self.mu = opts.barrier_mu
        self.band = opts.barrier_band
        self.bounds = (
            _coef_bounds(order.p, space.min_modulus)
            + _coef_bounds(order.q, space.min_modulus)
            + [(space.d_lo, space.d_hi)]
        )
        self.best = (np.inf, None)

    def _blocks(self):
        p, q = self.order.p, self.order.q
        out = []
        if p >= 2:
            out.append(slice(0, p))
        if q >= 2:
            out.append(slice(p, p + q))
        return out

    def _barrier_block(self, coefs):
        s = min_root_modulus(np.concatenate([[1.0], -coefs])) - self.space.min_modulus
        if s <= 0:
            return np.inf
        if s >= self.band:
            return 0.0
        return self.mu * math.log(s / self.band) ** 2

    def barrier(self, v):
        val = 0.0
        grad = np.zeros_like(v)
        for blk in self._blocks():
            c = v[blk]
            b0 = self._barrier_block(c)
            if not np.isfinite(b0):
                return np.inf, grad
            if b0 == 0.0:
                continue
            val += b0
            h = 1e-7
            for i in range(c.size):
                e = np.zeros_like(c)
                e[i] = h
                up, dn = self._barrier_block(c + e), self._barrier_block(c - e)
                if np.isfinite(up) and np.isfinite(dn):
                    grad[blk.start + i] = (up - dn) / (2 * h)
                else:
                    grad[blk.start + i] = (b0 - dn) / h if np.isfinite(dn) else (up - b0) / h
        return val, grad

    def __call__(self, v):
        bval, bgrad = self.barrier(v)
        if not np.isfinite(bval):
            return 1e10, np.zeros_like(v)
        ev = objective(ParamVector.from_flat(v, self.order), self.x, mode=None)
        if ev.value < self.best[0] and validate(ParamVector.from_flat(v, self.order), self.space).ok:
            self.best = (ev.value, v.copy())
        return ev.value / self.scale + bval, ev.grad / self.scale + bgrad

    def projected_grad(self, v, grad):
        g = grad.copy()
        for i, (lo, hi) in enumerate(self.bounds):
            if v[i] <= lo + 1e-12 and g[i] > 0:
                g[i] = 0.0
            if v[i] >= hi - 1e-12 and g[i] < 0:
                g[i] = 0.0
        return g


def _random_start(order: ModelOrder, space: ParamSpace, rng: np.random.Generator) -> np.ndarray:
    def draw(deg):
        if deg == 0:
            return np.zeros(0)
        # real roots with modulus in [R + 0.5, R + 3], random sign
        roots = rng.uniform(space.min_modulus + 0.5, space.min_modulus + 3.0, deg)
        roots *= rng.choice([-1.0, 1.0], deg)
        poly = np.array([1.0])
        for r in roots:
            poly = np.convolve(poly, [1.0, -1.0 / r])
        return -poly[1:]

    d = rng.uniform(space.d_lo, space.d_hi)
    return np.concatenate([draw(order.p), draw(order.q), [d]])


def _starts(order: ModelOrder, space: ParamSpace, opts: FitOptions) -> list[np.ndarray]:
    k = order.k
    starts = []
    for d in opts.start_ds:
        v = np.zeros(k)
        v[-1] = d
        starts.append(v)
    rng = np.random.default_rng(opts.seed)
    for _ in range(opts.random_starts):
        starts.append(_random_start(order, space, rng))
    return [v for v in starts if validate(ParamVector.from_flat(v, order), space).ok]


def _check_fit_input(x: np.ndarray, n_min: int = MIN_FIT_LENGTH) -> None:
    if x.size < n_min:
        raise DegenerateInputError(f"series too short: {x.size} observations, need at least {n_min}")
    if np.ptp(x) == 0.0:
        raise DegenerateInputError("degenerate input: constant series")


def _interior(crit: _Criterion, v: np.ndarray) -> bool:
    inside = all(lo + 1e-8 < vi < hi - 1e-8 for vi, (lo, hi) in zip(v, crit.bounds))
    return inside and crit.barrier(v)[0] == 0.0 and validate(ParamVector.from_flat(v, crit.order), crit.space).ok


def _polish(crit: _Criterion, v: np.ndarray, steps: int = 3) -> np.ndarray:
    """A few full-Hessian Newton steps at an interior optimum.

    Quasi-Newton iterations stop with a gradient around 1e-8; the Newton
    steps pin the optimum down to round-off, which makes the fit
    insensitive to the scale of the data.  A step is kept only if it stays
    interior and reduces the gradient norm.
    """
    order = crit.order
    for _ in range(steps):
        if not _interior(crit, v):
            break
        ev = objective(ParamVector.from_flat(v, order), crit.x, mode="full_hessian")
        gnorm = np.linalg.norm(ev.grad)
        if gnorm == 0.0:
            break
        try:
            step = linalg.cho_solve(linalg.cho_factor(ev.curvature), ev.grad)
        except linalg.LinAlgError:
            break
        cand = v - step
        if not _interior(crit, cand):
            break
        if np.linalg.norm(objective(ParamVector.from_flat(cand, order), crit.x, mode=None).grad) >= gnorm:
            break
        v = cand
    return v


def _minimize(x, order: ModelOrder, space: ParamSpace, opts: FitOptions):
    crit = _Criterion(x, order, space, opts)
    starts = _starts(order, space, opts)
    if not starts:
        raise InvalidParameterError("all multistart initial points are infeasible")
    best = None
    for v0 in starts:
        res = optimize.minimize(
            crit,
            v0,
            jac=True,
            method="L-BFGS-B",
            bounds=crit.bounds,
            options={"maxiter": opts.maxiter, "ftol": 1e-15, "gtol": 1e-10, "maxls": 50},
        )
        v = np.clip(res.x, [b[0] for b in crit.bounds], [b[1] for b in crit.bounds])
        if not validate(ParamVector.from_flat(v, order), space).ok:
            continue
        qv = objective(ParamVector.from_flat(v, order), x, mode=None).value
        if best is None or qv < best[0]:
            best = (qv, v, res)
    if best is None:
        _, bv = crit.best
        raise ConvergenceError(
            "no multistart run ended inside the parameter space",
            best=None if bv is None else ParamVector.from_flat(bv, order),
            value=crit.best[0],
        )
    qv, v, res = best
    v = _polish(crit, v)
    ev = objective(ParamVector.from_flat(v, order), x, mode=None)
    qv = ev.value
    _, bgrad = crit.barrier(v)
    pg = crit.projected_grad(v, ev.grad / crit.scale + bgrad)
    gnorm = float(np.linalg.norm(pg))
    converged = gnorm <= opts.gtol or (res.success and gnorm <= 1e3 * opts.gtol)
    if not converged:
        raise ConvergenceError(
            f"optimizer did not converge (scaled projected gradient norm {gnorm:.3g}: {res.message})",
            best=ParamVector.from_flat(v, order),
            value=qv,
        )
    return ParamVector.from_flat(v, order), qv, gnorm


def _covariance(theta: ParamVector, x: np.ndarray, mode: str, opts: FitOptions):
    """Curvature, long-run score covariance and sandwich at ``theta``."""
    res = compute_residuals(theta, x, want_hessian=(mode == "full_hessian"))
    n = x.size
    eps, g = res.eps, res.grad
    sigma2 = float(eps @ eps) / n
    if mode == "outer_product":
        J = 2.0 * (g.T @ g) / n
    elif mode == "full_hessian":
        J = 2.0 * (g.T @ g + np.einsum("t,tkl->kl", eps, res.hess)) / n
    else:
        J = closed_form_J(theta, sigma2, opts.closed_form_N)
    J = 0.5 * (J + J.T)
    I = hac_I(2.0 * eps[:, None] * g, opts.bandwidth)
    warnings = []
    try:
        omega = sandwich_cov(J, I)
        # iid-innovation formula 2 sigma^2 J^{-1}, for comparison
        omega_strong = sandwich_cov(J, 2.0 * sigma2 * J)
    except linalg.LinAlgError:
        omega = np.full_like(J, np.nan)
        omega_strong = np.full_like(J, np.nan)
        warnings.append("curvature matrix singular; covariance unavailable")
    se = np.sqrt(np.clip(np.diag(omega), 0.0, None) / n)
    return sigma2, J, I, omega, se, omega_strong, warnings


def lse_fit(
    data: ArrayLike,
    order: ModelOrder,
    space: Optional[ParamSpace] = None,
    options: Optional[FitOptions] = None,
) -> FitResult:
    """Least-squares fit of ``Q_n`` over the admissible set.

    Runs L-BFGS-B from each multistart point (ARMA block at zero with the
    ``start_ds`` values of ``d``, plus ``random_starts`` random admissible
    points) and keeps the lowest criterion value.
    """
    t0 = time.perf_counter()
    x = as_series(data)
    opts = options or FitOptions()
    space = space or ParamSpace(order)
    if space.order != order:
        raise InvalidParameterError("space order does not match the requested order")
    _check_fit_input(x)
    theta, qv, gnorm = _minimize(x, order, space, opts)
    sigma2, J, I, omega, se, omega_s, warns = _covariance(theta, x, opts.cov_curvature, opts)
    return FitResult(
        theta_hat=theta,
        sigma2_hat=sigma2,
        curvature_used=J,
        curvature_mode=opts.cov_curvature,
        I_hat=I,
        omega_hat=omega,
        std_errors=se,
        method="lse_full",
        n=x.size,
        m_used=x.size,
        wall_time=time.perf_counter() - t0,
        converged=True,
        feasible=True,
        grad_norm=gnorm,
        omega_strong=omega_s,
        warnings=warns,
    )


def subsample_size(n: int, delta: float) -> int:
    """``floor(n^delta)`` for ``1/2 < delta <= 1``."""
    if not (0.5 < delta <= 1.0):
        raise InvalidParameterError(f"delta must lie in (1/2, 1], got {delta}")
    m = int(math.floor(n**delta + 1e-9))
    return min(m, n)


def subsample_lse(
    data: ArrayLike,
    order: ModelOrder,
    space: Optional[ParamSpace] = None,
    delta: float = 0.9,
    options: Optional[FitOptions] = None,
) -> FitResult:
    """Least-squares fit on the first ``m = floor(n^delta)`` observations."""
    x = as_series(data)
    m = subsample_size(x.size, delta)
    if m < MIN_FIT_LENGTH:
        raise DegenerateInputError(
            f"series too short: subsample size m={m} < {MIN_FIT_LENGTH} (n={x.size}, delta={delta})"
        )
    fit = lse_fit(x[:m], order, space, options)
    fit.method = "lse_subsample"
    return fit


def onestep_fit(
    data: ArrayLike,
    order: ModelOrder,
    space: Optional[ParamSpace] = None,
    delta: float = 0.9,
    curvature_mode: CurvatureMode = "outer_product",
    options: Optional[FitOptions] = None,
    initial: Optional[ParamVector] = None,
) -> FitResult:
    """Subsample least squares followed by one full-sample Newton step.

    ``initial`` overrides the subsample fit as the starting point.  The
    updated point is not projected back into the parameter space; the
    ``feasible`` flag reports whether it is still admissible.
    """
    t0 = time.perf_counter()
    x = as_series(data)
    opts = options or FitOptions()
    space = space or ParamSpace(order)
    if curvature_mode not in CURVATURE_MODES:
        raise InvalidParameterError(f"unknown curvature mode {curvature_mode!r}")
    m = subsample_size(x.size, delta)
    _check_fit_input(x)
    if initial is None:
        if m < MIN_FIT_LENGTH:
            raise DegenerateInputError(
                f"series too short: subsample size m={m} < {MIN_FIT_LENGTH} (n={x.size}, delta={delta})"
            )
        theta0 = subsample_lse(x, order, space, delta, opts).theta_hat
    else:
        theta0 = _as_theta(initial, order)
        check_valid(theta0, space)

    ev = objective(theta0, x, mode=curvature_mode, closed_form_N=opts.closed_form_N)
    curv = ev.curvature
    cond = np.linalg.cond(curv)
    if not np.isfinite(cond) or cond > MAX_CONDITION:
        raise NearSingularCurvatureError(f"near-singular curvature (condition number {cond:.3g})")
    step = linalg.solve(curv, ev.grad, assume_a="sym")
    theta = ParamVector.from_flat(theta0.flat - step, order)

    warns = []
    feasible = validate(theta, space).ok
    if not feasible:
        warns.append("one-step estimate lies outside the parameter space")
    at = theta if _stable(theta) else theta0
    if at is theta0:
        warns.append("covariance evaluated at the initial estimate")
    sigma2, J, I, omega, se, omega_s, cov_warns = _covariance(at, x, curvature_mode, opts)
    return FitResult(
        theta_hat=theta,
        sigma2_hat=sigma2,
        curvature_used=curv,
        curvature_mode=curvature_mode,
        I_hat=I,
        omega_hat=omega,
        std_errors=se,
        method="onestep",
        n=x.size,
        m_used=m,
        wall_time=time.perf_counter() - t0,
        converged=True,
        feasible=feasible,
        theta_init=theta0,
        grad_norm=float(np.linalg.norm(ev.grad)),
        omega_strong=omega_s,
        warnings=warns + cov_warns,
    )
