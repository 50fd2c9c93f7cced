"""Exact computations with p-closed derivations, blow-up charts and
discrepancies of quotients by 1-foliations in characteristic p."""
from .ringcore import (
    AlgebraError,
    Poly,
    RingCtx,
    divide_exact,
    jacobian_det,
    ord_along,
    parse_poly,
    partial,
    print_poly,
    substitute,
)
from .derivation import (
    Derivation,
    NotPClosed,
    bracket,
    is_invariant_divisor,
    is_multiplicative,
    is_p_closed,
    p_power,
    saturate,
)

__version__ = "0.1.0"
