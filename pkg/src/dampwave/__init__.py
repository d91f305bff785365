"""Damped semilinear waves u_tt + R u + u_t = |u|^p driven by anisotropic Rockland operators.

Submodules: ``graded`` (structures and exponents), ``oscillator`` (mode kernels
and bounds), ``spectral`` (periodic grids and norms), ``oracle`` (quadrature
ground truth for the linear flow), ``evolution`` (nonlinear solver),
``experiments`` (suites) and ``cli``.
"""
__version__ = "0.1.0"

from .graded import (GradedStructure, classify, critical_exponent, gamma_tilde, isotropic,
                     lifespan_exponent, new_graded, symbol)
from .oscillator import duhamel_weights, kernels
from .spectral import Grid

__all__ = [
    "GradedStructure", "Grid", "classify", "critical_exponent", "duhamel_weights",
    "gamma_tilde", "isotropic", "kernels", "lifespan_exponent", "new_graded", "symbol",
]
