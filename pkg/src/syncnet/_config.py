"""Numerical tolerances shared by every module.

All thresholds live here so that a change of policy is a one-line edit and
certificates stay reproducible.
"""
from dataclasses import dataclass


@dataclass(frozen=True)
class Tolerances:
    # algebraic identities (R R^-1 = I, conjugated norms), before scaling by kappa
    algebraic: float = 1e-10
    # |lambda| < zero_rel * ||L||_inf counts as a zero Laplacian eigenvalue
    zero_rel: float = 1e-9
    # eigenvalues closer than distinct_rel * ||L||_inf are treated as repeated
    distinct_rel: float = 1e-6
    # sigma_min < singular_rel * ||M||_2 is treated as singular
    singular_rel: float = 1e-12
    # row sums of a Laplacian must vanish to row_sum_rel * ||L||_inf
    row_sum_rel: float = 1e-12
    # residual of a user supplied Jordan factorisation, relative to ||L||_inf
    factorisation_rel: float = 1e-9
    # symmetry test ||M - M^T||_inf < symmetry_rel * ||M||_inf
    symmetry_rel: float = 1e-12
    # spreads below this are treated as numerically zero when fitting rates
    underflow_floor: float = 1e-13
    # largest Jordan block for which factorials are exactly representable
    max_jordan_block: int = 12


TOL = Tolerances()
