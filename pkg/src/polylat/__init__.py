"""Interlaced scrambled polynomial lattice rules.

Construction of generating vectors by component-by-component search, the
quality criterion driving it, guaranteed error bounds, digit scrambling, and
randomized integration, over prime-base finite fields.
"""

from .bounds import (
    best_bound_over_lambda,
    c_const,
    c_tilde,
    full_vector_bound,
    lambda_grid,
    lambda_lower,
    propagated_weights,
    propagation_check,
    rule_bound,
    theorem_bound,
)
from .cbc import (
    RuleSpec,
    cbc_fast,
    cbc_naive,
    construct,
    load_rule,
    save_rule,
)
from .criterion import (
    GeneralWeights,
    ProductWeights,
    SmoothnessParams,
    Weights,
    criterion_bruteforce,
    criterion_general,
    criterion_partial,
    criterion_product,
    phi_float,
)
from .estimator import (
    BUILTIN_KINDS,
    Integrand,
    RqmcResult,
    builtin_integrand,
    integrate_once,
    rqmc_estimate,
)
from .fieldpoly import ModulusContext, decode_poly, encode_poly, find_irreducible
from .interlace import deinterlace_set, interlace_set
from .points import DigitMatrix, GeneratingVector, generate_point_set
from .scramble import ScrambleConfig, order_d_scramble, scramble_set
from .sweep import SweepConfig, SweepSetting, fit_slope, preset, run_sweep, sweep_csv

__version__ = "0.1.0"

__all__ = [
    "BUILTIN_KINDS",
    "DigitMatrix",
    "GeneralWeights",
    "GeneratingVector",
    "Integrand",
    "ModulusContext",
    "ProductWeights",
    "RqmcResult",
    "RuleSpec",
    "ScrambleConfig",
    "SmoothnessParams",
    "SweepConfig",
    "SweepSetting",
    "Weights",
    "best_bound_over_lambda",
    "builtin_integrand",
    "c_const",
    "c_tilde",
    "cbc_fast",
    "cbc_naive",
    "construct",
    "criterion_bruteforce",
    "criterion_general",
    "criterion_partial",
    "criterion_product",
    "decode_poly",
    "deinterlace_set",
    "encode_poly",
    "find_irreducible",
    "fit_slope",
    "full_vector_bound",
    "generate_point_set",
    "integrate_once",
    "interlace_set",
    "lambda_grid",
    "lambda_lower",
    "load_rule",
    "order_d_scramble",
    "phi_float",
    "preset",
    "propagated_weights",
    "propagation_check",
    "rqmc_estimate",
    "rule_bound",
    "run_sweep",
    "save_rule",
    "scramble_set",
    "sweep_csv",
    "theorem_bound",
]
