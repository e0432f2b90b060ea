"""Numerical laboratory for the complex Ginzburg-Landau semigroup.

Spectral evaluation of exp(t nu Lap) on a periodic box, complex Hermite
polynomials, moment-based asymptotic profiles, a small-data exponential
integrator for u_t - nu Lap u = f(u), and decay-rate analysis.
"""
from .errors import (BlowUp, CGLLabError, ConfigError, DomainTooSmall, FieldCorruption,
                     IncompleteSpec, OutOfTheoremScope, StepUnderflow)
from .field import Grid, GridField, dilate, lq_norm, translate, weighted_l1
from .params import Params
from .semigroup import KernelSpec, apply, gaussian, laplacian_power

__version__ = "0.1.0"

__all__ = [
    "BlowUp", "CGLLabError", "ConfigError", "DomainTooSmall", "FieldCorruption",
    "IncompleteSpec", "OutOfTheoremScope", "StepUnderflow",
    "Grid", "GridField", "dilate", "lq_norm", "translate", "weighted_l1",
    "Params", "KernelSpec", "apply", "gaussian", "laplacian_power",
]
