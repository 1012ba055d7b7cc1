"""Bernstein-basis weak-form time stepping for damped single-degree-of-freedom oscillators."""

from .bernstein import BernsteinPoly, eval_basis, inner_l2c
from .closed_form import exact_free_response, p3_damped_step, p3_undamped_step, xi_coefficients
from .errors import (
    ConfigError,
    ConvergenceError,
    IllConditionedError,
    NumericalError,
    SpectralStructureError,
    StepError,
)
from .legendre import bernstein_to_legendre, to_legendre
from .spectral_analysis import build_force_family, gram_study, study_cell
from .weakform import (
    Constant,
    Harmonic,
    PiecewiseConstant,
    PiecewiseExponential,
    SdofSystem,
    Tabulated,
    Zero,
    simulate,
)

__version__ = "0.1.0"

__all__ = [
    "BernsteinPoly",
    "eval_basis",
    "inner_l2c",
    "exact_free_response",
    "p3_damped_step",
    "p3_undamped_step",
    "xi_coefficients",
    "ConfigError",
    "ConvergenceError",
    "IllConditionedError",
    "NumericalError",
    "SpectralStructureError",
    "StepError",
    "bernstein_to_legendre",
    "to_legendre",
    "build_force_family",
    "gram_study",
    "study_cell",
    "SdofSystem",
    "simulate",
    "Zero",
    "Constant",
    "PiecewiseConstant",
    "PiecewiseExponential",
    "Harmonic",
    "Tabulated",
]
