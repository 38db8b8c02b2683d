"""Hypergeometric functions and Fourier transform for BC_r root systems with signed multiplicities."""

from .core_types import BCHFError, MultiplicityBC
from .hc_series import F, F_discrete, F_residual, SeriesBudget, phi
from .cfunctions import c, c_tilde
from .spectra import assemble_measure, density_d, enumerate_D

__version__ = "0.1.0"

__all__ = [
    "BCHFError",
    "MultiplicityBC",
    "F",
    "F_discrete",
    "F_residual",
    "SeriesBudget",
    "phi",
    "c",
    "c_tilde",
    "assemble_measure",
    "density_d",
    "enumerate_D",
]
