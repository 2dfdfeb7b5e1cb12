"""Closed-form error bounds and related constants for constructed rules.

The bound machinery lives on a free parameter lambda in (1/(2min(alpha,d)+1), 1]:
smaller lambda sharpens the rate in b^m while inflating the constant, so the
reported bound is minimized over a grid of lambdas. All quantities here are
coarse envelopes; plain double arithmetic is plenty.
"""

from __future__ import annotations

import math

import numpy as np

from .cbc import RuleSpec
from .criterion import (
    GeneralWeights,
    ProductWeights,
    SmoothnessParams,
    Weights,
    criterion_partial,
)

LAMBDA_GRID_SIZE = 33
_EPS_REL = 1e-6  # relative offset from the divergent endpoint


def lambda_lower(alpha: int, d: int) -> float:
    """Open lower endpoint of the valid lambda interval."""
    return 1.0 / (2 * min(alpha, d) + 1)


def validate_lambda(alpha: int, d: int, lam: float) -> float:
    lo = lambda_lower(alpha, d)
    if not lo < lam <= 1.0:
        raise ValueError(f"lambda must lie in ({lo}, 1], got {lam}")
    return float(lam)


def lambda_grid(alpha: int, d: int, size: int = LAMBDA_GRID_SIZE) -> np.ndarray:
    """Grid over the valid interval, geometrically refined toward the lower end.

    The bound blows up at the lower endpoint and is most sensitive near it, so
    offsets from the endpoint are geometrically spaced; the last point is
    exactly 1. A size-1 grid is just [1.0].
    """
    if size < 1:
        raise ValueError(f"grid size must be >= 1, got {size}")
    if size == 1:
        return np.array([1.0])
    lo = lambda_lower(alpha, d)
    start = lo * _EPS_REL  # first offset from the endpoint
    ratio = ((1.0 - lo) / start) ** (1.0 / (size - 1))
    offsets = start * ratio ** np.arange(size)
    grid = lo + offsets
    grid[-1] = 1.0
    return grid


def c_tilde(alpha: int, d: int, lam: float, base: int) -> float:
    """Per-digit series constant: max of the two closed-form branches."""
    lam = validate_lambda(alpha, d, lam)
    c2 = 2 * min(alpha, d)
    first = ((base - 1) / (1.0 - float(base) ** -c2)) ** lam
    second = (base - 1) / (1.0 - float(base) ** (1.0 - (c2 + 1) * lam))
    return max(first, second)


def c_const(alpha: int, d: int, lam: float, a: int, base: int) -> float:
    """Per-block constant for a block of a coordinates (0 <= a <= d)."""
    if not 0 <= a <= d:
        raise ValueError(f"block size a must lie in [0, {d}], got {a}")
    if a == 0:
        return 0.0
    ct = c_tilde(alpha, d, lam, base)
    return 4.0 ** (lam * max(d - alpha, 0)) * (-1.0 + (1.0 + ct) ** a)


def _gamma_pow(g: float, lam: float) -> float:
    return 0.0 if g == 0.0 else g**lam


def _bracket_terms(
    weights: Weights, lam: float, c_full: float, j0: int, c_last: float
) -> float:
    """The two subset sums inside the theorem bracket, in closed/bitmask form."""
    if isinstance(weights, ProductWeights):
        prodfac = 1.0
        for j in range(1, j0):
            prodfac *= 1.0 + _gamma_pow(weights.gamma(j), lam) * c_full
        part1 = prodfac - 1.0
        part2 = c_last * _gamma_pow(weights.gamma(j0), lam) * prodfac
        return part1 + part2
    total = 0.0
    j0_bit = 1 << (j0 - 1)
    allowed = j0_bit - 1  # subsets of {1..j0-1}
    for mask, gamma in sorted(weights.values.items()):
        if gamma == 0.0:
            continue
        if mask & ~allowed & ~j0_bit:
            continue
        size_u = int(bin(mask & allowed).count("1"))
        if mask & j0_bit:
            total += c_last * _gamma_pow(gamma, lam) * c_full**size_u
        elif mask:
            total += _gamma_pow(gamma, lam) * c_full**size_u
    return total


def theorem_bound(
    tau: int, m: int, alpha: int, d: int, lam: float, weights: Weights, base: int
) -> float:
    """Guaranteed criterion bound for the first tau components of a built rule.

    tau decomposes as (j0-1)d + d0 with 0 < d0 <= d: blocks before j0 are
    complete, block j0 holds d0 coordinates and enters through the smaller
    block constant.
    """
    lam = validate_lambda(alpha, d, lam)
    if tau < 1:
        raise ValueError(f"tau must be >= 1, got {tau}")
    j0 = -(-tau // d)
    d0 = tau - (j0 - 1) * d
    if weights.s < j0:
        raise ValueError(f"need weights for {j0} coordinates, got {weights.s}")
    c_full = c_const(alpha, d, lam, d, base)
    c_last = c_const(alpha, d, lam, d0, base)
    bracket = _bracket_terms(weights, lam, c_full, j0, c_last)
    return _scaled_root(bracket, lam, base, m)


def _scaled_root(bracket: float, lam: float, base: int, m: int) -> float:
    """(base^m - 1)^(-1/lam) * bracket^(1/lam), surviving huge brackets.

    Near the open end of the lambda interval the bracket blows up and the
    direct power overflows; the value is then recovered in log space (inf
    when even the combined exponent exceeds float range).
    """
    n1 = base**m - 1.0
    try:
        return n1 ** (-1.0 / lam) * bracket ** (1.0 / lam)
    except OverflowError:
        log_val = (math.log(bracket) - math.log(n1)) / lam
        return math.exp(log_val) if log_val < 709.0 else math.inf


def full_vector_bound(
    s: int, m: int, alpha: int, d: int, lam: float, weights: Weights, base: int
) -> float:
    """Bound for a complete vector via the all-coordinates subset sum.

    Algebraically equal to theorem_bound at tau = s*d; kept as an independent
    reading and cross-checked in tests.
    """
    lam = validate_lambda(alpha, d, lam)
    if weights.s < s:
        raise ValueError(f"need weights for {s} coordinates, got {weights.s}")
    c_full = c_const(alpha, d, lam, d, base)
    if isinstance(weights, ProductWeights):
        bracket = -1.0
        prodfac = 1.0
        for j in range(1, s + 1):
            prodfac *= 1.0 + _gamma_pow(weights.gamma(j), lam) * c_full
        bracket += prodfac
    else:
        allowed = (1 << s) - 1
        bracket = 0.0
        for mask, gamma in sorted(weights.values.items()):
            if gamma == 0.0 or mask == 0 or mask & ~allowed:
                continue
            bracket += _gamma_pow(gamma, lam) * c_full ** int(bin(mask).count("1"))
    return _scaled_root(bracket, lam, base, m)


def best_bound_over_lambda(
    tau: int,
    m: int,
    alpha: int,
    d: int,
    weights: Weights,
    base: int,
    grid_size: int = LAMBDA_GRID_SIZE,
) -> tuple[float, float]:
    """(lambda*, bound*): the tightest theorem_bound on the lambda grid."""
    best_lam, best_val = 1.0, math.inf
    for lam in lambda_grid(alpha, d, grid_size).tolist():
        val = theorem_bound(tau, m, alpha, d, lam, weights, base)
        if val < best_val:
            best_lam, best_val = lam, val
    return best_lam, best_val


def rule_bound(rule: RuleSpec, grid_size: int = LAMBDA_GRID_SIZE) -> tuple[float, float]:
    """(lambda*, bound*) for a constructed rule's full vector."""
    return best_bound_over_lambda(
        rule.s * rule.d, rule.m, rule.alpha, rule.d, rule.weights, rule.b, grid_size
    )


def propagated_weights(weights: Weights, alpha: int, d: int, alpha_prime: int) -> Weights:
    """Weights under which a rule built for alpha serves smoothness alpha_prime.

    Defined through 4^{|w|(d-a')} gamma'_w = (4^{|w|(d-a)} gamma_w)^rho with
    rho = (1+2a')/(1+2a).
    """
    rho = (1 + 2 * alpha_prime) / (1 + 2 * alpha)
    if isinstance(weights, ProductWeights):
        f_old = 4.0 ** (d - alpha)
        f_new = 4.0 ** -(d - alpha_prime)
        return ProductWeights(tuple(f_new * (f_old * g) ** rho for g in weights.gammas))
    out = {}
    for mask, gamma in weights.values.items():
        k = int(bin(mask).count("1"))
        out[mask] = 4.0 ** (-k * (d - alpha_prime)) * (4.0 ** (k * (d - alpha)) * gamma) ** rho
    return GeneralWeights(s=weights.s, values=out)


def propagation_check(
    rule: RuleSpec, alpha_prime: int, tol: float = 1e-10
) -> bool:
    """Does the rule keep the higher-smoothness criterion under control?

    Compares the criterion at alpha_prime (with the transformed weights)
    against the constructed criterion raised to rho = (1+2a')/(1+2a).
    """
    if not rule.alpha <= alpha_prime <= rule.d:
        raise ValueError(
            f"alpha_prime must lie in [{rule.alpha}, {rule.d}], got {alpha_prime}"
        )
    ctx = rule.context()
    rho = (1 + 2 * alpha_prime) / (1 + 2 * rule.alpha)
    base_params = SmoothnessParams(rule.alpha, rule.d)
    prime_params = SmoothnessParams(alpha_prime, rule.d)
    w_prime = propagated_weights(rule.weights, rule.alpha, rule.d, alpha_prime)
    b_base = criterion_partial(rule.q, ctx, base_params, rule.weights)
    b_prime = criterion_partial(rule.q, ctx, prime_params, w_prime)
    return b_prime <= b_base**rho + tol
