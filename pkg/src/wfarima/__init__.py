"""Least-squares and Le Cam one-step calibration of weak FARIMA(p, d, q) models."""

from .errors import (
    ConvergenceError,
    DegenerateInputError,
    ExperimentUnstableError,
    FarimaError,
    InvalidParameterError,
    NearSingularCurvatureError,
)
from .inference import (
    FitOptions,
    FitResult,
    closed_form_J,
    hac_I,
    lse_fit,
    objective,
    onestep_fit,
    sandwich_cov,
    score_sequence,
    subsample_lse,
)
from .model import ModelOrder, ParamSpace, ParamVector, min_root_modulus, validate
from .residuals import ar_inf_coeffs, compute_residuals
from .simulate import NoiseSpec, SimConfig, gen_noise, ma_inf_coeffs, simulate_farima

__version__ = "0.1.0"

__all__ = [
    "ConvergenceError",
    "DegenerateInputError",
    "ExperimentUnstableError",
    "FarimaError",
    "FitOptions",
    "FitResult",
    "InvalidParameterError",
    "ModelOrder",
    "NearSingularCurvatureError",
    "NoiseSpec",
    "ParamSpace",
    "ParamVector",
    "SimConfig",
    "ar_inf_coeffs",
    "closed_form_J",
    "compute_residuals",
    "gen_noise",
    "hac_I",
    "lse_fit",
    "ma_inf_coeffs",
    "min_root_modulus",
    "objective",
    "onestep_fit",
    "sandwich_cov",
    "score_sequence",
    "simulate_farima",
    "subsample_lse",
    "validate",
]
