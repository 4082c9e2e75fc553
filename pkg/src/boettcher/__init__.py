"""Exact arithmetic for the Boettcher coordinate of x^(p^2) + p^(r+2) x^(p^2+1).

Solve the conjugacy for the coefficient table of a family member, then run
the verification checks: modular congruence laws on the special fiber and
valuation laws on the higher fibers, all in exact rational arithmetic.
"""

from .padic import (
    DigitExpansion,
    NotPIntegralError,
    Valuation,
    ValuationMismatchError,
    carry_defect,
    digit_sum,
    digits,
    factorial_valuation,
    mod_p_reduce,
    ord_p,
    prime_part_factorial_mod_p,
    unit_part_mod_p,
)
from .reports import CheckReport, Witness
from .series import MVPolynomial, PowerSeries, TruncationError
from .solver import (
    DESK_SCALE_CAPS,
    ABCDecomposition,
    CoefficientTable,
    FamilyParams,
    PIntegralityError,
    abc_decompose,
    residual_check,
    solve_coefficients,
)

__version__ = "0.1.0"

__all__ = [
    "ABCDecomposition",
    "CheckReport",
    "CoefficientTable",
    "DESK_SCALE_CAPS",
    "DigitExpansion",
    "FamilyParams",
    "MVPolynomial",
    "NotPIntegralError",
    "PIntegralityError",
    "PowerSeries",
    "TruncationError",
    "Valuation",
    "ValuationMismatchError",
    "Witness",
    "abc_decompose",
    "carry_defect",
    "digit_sum",
    "digits",
    "factorial_valuation",
    "mod_p_reduce",
    "ord_p",
    "prime_part_factorial_mod_p",
    "residual_check",
    "solve_coefficients",
    "unit_part_mod_p",
]
