"""CHSH nonlocality of a two-mode squeezed vacuum sent through lossy channels."""

from .analytic_core import BellResult, ChannelParams, bmax_analytic
from .errors import (
    BracketingError,
    ConfigurationError,
    ConvergenceError,
    DivergenceError,
    DomainError,
    NeverNonlocalError,
)
from .nonlocality import chsh_value, horodecki_bmax
from .threshold import Scenario, gamma_from_R, R_from_gamma, rmax

__version__ = "0.1.0"

__all__ = [
    "BellResult",
    "BracketingError",
    "ChannelParams",
    "ConfigurationError",
    "ConvergenceError",
    "DivergenceError",
    "DomainError",
    "NeverNonlocalError",
    "R_from_gamma",
    "Scenario",
    "bmax_analytic",
    "chsh_value",
    "gamma_from_R",
    "horodecki_bmax",
    "rmax",
]
