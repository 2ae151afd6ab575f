"""The fit pipeline shared by the command line and the HTTP service."""

from __future__ import annotations

from importlib import resources
from pathlib import Path
from typing import Optional

import numpy as np
from numpy.typing import ArrayLike

from .errors import DegenerateInputError, InvalidParameterError
from .harness import transform_returns
from .inference import CURVATURE_MODES, MIN_FIT_LENGTH, FitOptions, FitResult, lse_fit, onestep_fit, subsample_lse
from .model import ModelOrder, ParamSpace

FIT_METHODS = ("lse", "onestep", "lse_subsample")
TRANSFORMS = ("none", "returns_squared_centered")

# 5000-point samples shipped with the package, regenerated by
#   wfarima simulate --ar 0.2 --ma 0.5 --d 0.3 --n 5000 --seed 11           (strong)
#   wfarima simulate --ar 0.2 --ma 0.5 --d 0.3 --n 5000 --seed 12 --noise weak_product
#   wfarima simulate --d 0.3 --n 5000 --seed 13                             (fractional)
SAMPLES = {
    "strong": "strong_farima11.csv",
    "weak": "weak_farima11.csv",
    "fractional": "fractional_d03.csv",
}


def sample_path(name: str) -> Path:
    """Path of a bundled sample: ``strong``, ``weak`` or ``fractional``."""
    if name not in SAMPLES:
        raise KeyError(f"unknown sample {name!r}; choose from {sorted(SAMPLES)}")
    return Path(str(resources.files("wfarima") / "data" / SAMPLES[name]))


def load_sample(name: str) -> np.ndarray:
    return np.loadtxt(sample_path(name), skiprows=1, ndmin=1)


def fit_series(
    series: ArrayLike,
    p: int,
    q: int,
    method: str = "onestep",
    delta: float = 0.9,
    curvature_mode: str = "outer_product",
    transform: str = "none",
    options: Optional[FitOptions] = None,
) -> FitResult:
    """Transform (optionally) and fit ``series``; deterministic given its inputs."""
    if method not in FIT_METHODS:
        raise InvalidParameterError(f"method must be one of {FIT_METHODS}, got {method!r}")
    if transform not in TRANSFORMS:
        raise InvalidParameterError(f"transform must be one of {TRANSFORMS}, got {transform!r}")
    if curvature_mode not in CURVATURE_MODES:
        raise InvalidParameterError(f"curvature mode must be one of {CURVATURE_MODES}, got {curvature_mode!r}")
    if not (0.5 < delta <= 1.0):
        raise InvalidParameterError(f"delta must lie in (1/2, 1], got {delta}")
    x = np.asarray(series, dtype=float)
    if transform == "returns_squared_centered":
        x = transform_returns(x)
    if x.size < MIN_FIT_LENGTH:
        raise DegenerateInputError(f"series too short: {x.size} observations, need at least {MIN_FIT_LENGTH}")
    order = ModelOrder(p, q)
    space = ParamSpace(order)
    if method == "lse":
        return lse_fit(x, order, space, options)
    if method == "lse_subsample":
        return subsample_lse(x, order, space, delta, options)
    return onestep_fit(x, order, space, delta, curvature_mode, options)
