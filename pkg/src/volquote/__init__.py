"""Indifference pricing and hedging of volatility claims in the reciprocal affine model."""

from .claims import (
    ZERO,
    CallSpread,
    Constant,
    Put,
    RiskAversion,
    Tabulated,
    VolClaim,
    parse_claim,
)
from .errors import (
    BranchTrackingError,
    ClaimError,
    GridError,
    NumericalError,
    ParameterError,
    VolquoteError,
)
from .model import REFERENCE_PARAMS, ModelParams, TildeParams, VolState, derive_tilde_params
from .pricer import (
    DensityPair,
    FourierGrid,
    Pricer,
    Quote,
    build_densities,
    market_price_of_risk,
    quote,
    surface,
)

__version__ = "0.1.0"

__all__ = [
    "ZERO", "BranchTrackingError", "CallSpread", "ClaimError", "Constant", "DensityPair",
    "FourierGrid", "GridError", "ModelParams", "NumericalError", "REFERENCE_PARAMS",
    "ParameterError", "Pricer", "Put", "Quote", "RiskAversion", "Tabulated", "TildeParams",
    "VolClaim", "VolState", "VolquoteError", "build_densities", "derive_tilde_params",
    "market_price_of_risk", "parse_claim", "quote", "surface",
]
