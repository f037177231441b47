"""Corona solving, dbar kernels and Carleson/BMO norm estimation on the unit ball."""

from .ball import Tent, delta, mobius, mobius_magnitude, pairing, sqnorm, tent_contains
from .holo import HoloPoly, VecHoloPoly
from .koszul import CoronaData, CoronaViolation, koszul_residual, omega
from .norms import (TentGrid, annulus_check, bmo_norm, bmoa_ratio, cm_norm,
                    multilinear_harness, wx_norm)
from .quadrature import quad_ball
from .solver import CoronaSolver, DbarSolver, PolyForm, dbar_solve
from .tabc import TabcOperator, TabcParams, tabc_apply, tabc_region_harness

__version__ = "0.1.0"

__all__ = [
    "Tent", "delta", "mobius", "mobius_magnitude", "pairing", "sqnorm", "tent_contains",
    "HoloPoly", "VecHoloPoly", "CoronaData", "CoronaViolation", "koszul_residual", "omega",
    "TentGrid", "annulus_check", "bmo_norm", "bmoa_ratio", "cm_norm", "multilinear_harness",
    "wx_norm", "quad_ball", "CoronaSolver", "DbarSolver", "PolyForm", "dbar_solve",
    "TabcOperator", "TabcParams", "tabc_apply", "tabc_region_harness",
]
