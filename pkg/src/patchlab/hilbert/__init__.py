"""Hilbert transforms on the torus and the line, and the operator identities built on them."""

from .identities import (
    CotlarReport,
    DualPath,
    IdentityViolation,
    RecursionDepthError,
    TContext,
    cotlar_residual,
    dv_of_PiQ_check,
    hilbert_power_norms,
    op_A,
    op_HT_recursion,
    op_T,
    product_formula_Hfg,
    product_formula_residual,
)
from .line import hilbert_line, hilbert_line_at, hilbert_line_nodes, sampled_hilbert
from .torus import commutation_residual, diff_quotient_torus, hilbert_torus, hilbert_torus_quadrature
from .twopoint import TwoPointField, constant, diff_quotient, q_product

__all__ = [
    "CotlarReport", "DualPath", "IdentityViolation", "RecursionDepthError", "TContext",
    "TwoPointField", "commutation_residual", "constant", "cotlar_residual", "diff_quotient",
    "diff_quotient_torus", "dv_of_PiQ_check", "hilbert_line", "hilbert_line_at",
    "hilbert_line_nodes", "hilbert_power_norms", "hilbert_torus", "hilbert_torus_quadrature",
    "op_A", "op_HT_recursion", "op_T", "product_formula_Hfg", "product_formula_residual",
    "q_product", "sampled_hilbert",
]
