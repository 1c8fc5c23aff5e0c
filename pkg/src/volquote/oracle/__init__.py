"""Independent checks: Monte Carlo, finite differences, SDE moment matching."""

from .agreement import AgreementReport, reference_point, three_way
from .montecarlo import (
    McEstimate,
    McPrice,
    SimSpec,
    mc_bond,
    mc_discounted_expectation,
    mc_price,
    simulate_cir,
    zero_touch_fraction,
)
from .pde import PdeGrid, PdeSolution, pde_price
from .sde import (
    SdeReport,
    mean_reversion_time,
    sde_consistency_report,
    stationary_moments,
    stationary_statistics,
)

__all__ = [
    "AgreementReport", "McEstimate", "McPrice", "PdeGrid", "PdeSolution", "SdeReport",
    "SimSpec", "mc_bond", "mc_discounted_expectation", "mc_price", "mean_reversion_time",
    "reference_point", "pde_price", "sde_consistency_report", "simulate_cir",
    "stationary_moments", "stationary_statistics", "three_way", "zero_touch_fraction",
]
