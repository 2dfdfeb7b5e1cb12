"""Worst-case error bounds, lambda tuning, and smoothness propagation."""

import math

import numpy as np
import pytest

from polylat.bounds import (
    LAMBDA_GRID_SIZE,
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
    validate_lambda,
)
from polylat.cbc import cbc_fast
from polylat.criterion import (
    GeneralWeights,
    ProductWeights,
    SmoothnessParams,
    criterion_partial,
)


def test_lambda_interval():
    assert lambda_lower(1, 1) == 1 / 3
    assert lambda_lower(2, 3) == 1 / 5
    assert lambda_lower(3, 2) == 1 / 5
    validate_lambda(1, 1, 1.0)
    validate_lambda(1, 1, 0.34)
    for bad in (1 / 3, 0.2, 1.0001, 0.0, -1.0):
        with pytest.raises(ValueError):
            validate_lambda(1, 1, bad)


def test_lambda_grid_shape():
    g = lambda_grid(1, 1)
    assert len(g) == LAMBDA_GRID_SIZE == 33
    assert g[-1] == 1.0
    assert np.all(np.diff(g) > 0)
    lo = lambda_lower(1, 1)
    assert g[0] > lo
    # first point sits a relative 1e-6 above the open endpoint
    assert abs((g[0] - lo) / lo - 1e-6) < 1e-9
    # offsets from the endpoint grow geometrically
    offs = g[:-1] - lo
    ratios = offs[1:] / offs[:-1]
    assert np.allclose(ratios, ratios[0], rtol=1e-9)


def test_lambda_grid_size_one():
    assert list(lambda_grid(2, 2, 1)) == [1.0]


def test_c_tilde_examples():
    assert c_tilde(1, 1, 1.0, 2) == pytest.approx(4 / 3, abs=1e-15)
    assert c_tilde(1, 1, 1.0, 3) == pytest.approx(9 / 4, abs=1e-15)


def test_c_const_examples_and_monotonicity():
    assert c_const(2, 3, 0.5, 0, 2) == 0.0
    assert c_const(1, 1, 1.0, 1, 2) == pytest.approx(4 / 3, abs=1e-15)
    for alpha, d, lam, b in ((1, 3, 1.0, 2), (2, 2, 0.5, 3), (3, 2, 0.9, 2)):
        vals = [c_const(alpha, d, lam, a, b) for a in range(d + 1)]
        assert all(x < y for x, y in zip(vals, vals[1:])), vals
    with pytest.raises(ValueError):
        c_const(1, 2, 1.0, 3, 2)  # a beyond d


def test_theorem_bound_anchor_value():
    tb = theorem_bound(1, 2, 1, 1, 1.0, ProductWeights((1.0,)), 2)
    assert tb == pytest.approx(4 / 9, abs=1e-15)
    assert tb >= 1 / 48  # sits above the best achievable value there


def test_zero_weights_give_zero_bound():
    wz = ProductWeights((0.0, 0.0))
    assert theorem_bound(3, 4, 2, 2, 0.8, wz, 2) == 0.0
    assert full_vector_bound(2, 4, 2, 2, 0.8, wz, 2) == 0.0


def test_bound_decreases_in_m():
    w = ProductWeights(tuple(1.0 / j**2 for j in range(1, 4)))
    vals = [theorem_bound(5, m, 2, 2, 0.7, w, 2) for m in range(3, 10)]
    assert all(x > y for x, y in zip(vals, vals[1:])), vals


def test_block_decomposition_matches_full_sum_at_round_tau():
    for alpha, d, s, lam, b in ((1, 1, 3, 1.0, 2), (2, 2, 3, 0.6, 2), (1, 2, 2, 0.9, 3)):
        wp = ProductWeights(tuple(0.7 / j for j in range(1, s + 1)))
        a_ = theorem_bound(s * d, 6, alpha, d, lam, wp, b)
        b_ = full_vector_bound(s, 6, alpha, d, lam, wp, b)
        assert a_ == pytest.approx(b_, rel=1e-14)
        wg = GeneralWeights.from_product(wp)
        assert theorem_bound(s * d, 6, alpha, d, lam, wg, b) == pytest.approx(a_, rel=1e-12)
        assert full_vector_bound(s, 6, alpha, d, lam, wg, b) == pytest.approx(b_, rel=1e-12)


def test_general_weights_subset_selection():
    # only coordinate sets inside {1..j0} may contribute at level tau
    wg = GeneralWeights(
        s=3, values={0b001: 0.5, 0b010: 0.4, 0b100: 0.3, 0b011: 0.2, 0b111: 0.9}
    )
    ct = c_tilde(1, 1, 1.0, 2)
    scale = (2**5 - 1) ** -1.0
    v1 = theorem_bound(1, 5, 1, 1, 1.0, wg, 2)
    assert v1 == pytest.approx(scale * (ct * 0.5), abs=1e-15)
    v2 = theorem_bound(2, 5, 1, 1, 1.0, wg, 2)
    assert v2 == pytest.approx(scale * (0.5 * ct + ct * (0.4 + 0.2 * ct)), abs=1e-14)


def test_best_bound_over_lambda():
    w = ProductWeights((1.0, 1.0))
    lam_star, b_star = best_bound_over_lambda(4, 8, 2, 2, w, 2)
    at_one = theorem_bound(4, 8, 2, 2, 1.0, w, 2)
    assert b_star <= at_one + 1e-18
    assert any(abs(lam_star - x) < 1e-15 for x in lambda_grid(2, 2))
    l1, v1 = best_bound_over_lambda(4, 8, 2, 2, w, 2, grid_size=1)
    assert l1 == 1.0
    assert v1 == pytest.approx(at_one, abs=1e-18)


def test_bound_dominates_constructed_criterion_everywhere():
    for b, m, s, d, alpha in ((2, 6, 3, 1, 1), (2, 5, 2, 2, 2), (3, 4, 2, 2, 1)):
        w = ProductWeights(tuple(1.0 / j**2 for j in range(1, s + 1)))
        rule = cbc_fast(b, m, s, d, alpha, w)
        ctx = rule.context()
        params = SmoothnessParams(alpha, d)
        for tau in range(1, s * d + 1):
            crit = criterion_partial(rule.q, ctx, params, w, tau=tau)
            for lam in lambda_grid(alpha, d).tolist():
                tb = theorem_bound(tau, m, alpha, d, lam, w, b)
                assert tb >= crit - 1e-12 * max(1.0, crit), (b, m, tau, lam)


def test_summable_weights_cap_bound_uniformly_in_s():
    caps = []
    for s in range(1, 65):
        w = ProductWeights.from_spec(s, "j^-2")
        caps.append(full_vector_bound(s, 10, 2, 2, 1.0, w, 2))
    assert all(x <= y + 1e-18 for x, y in zip(caps, caps[1:]))
    # sum_j j^-2 = pi^2/6 gives a dimension-independent ceiling
    cfull = c_const(2, 2, 1.0, 2, 2)
    cap = (2**10 - 1) ** -1.0 * (-1.0 + math.exp(cfull * math.pi**2 / 6))
    assert caps[-1] <= cap
    assert caps[-1] / caps[31] < 1.1  # tail nearly exhausted by s = 32


def test_propagated_weights_identity_and_transform():
    w = ProductWeights((0.5, 0.25))
    w_same = propagated_weights(w, 2, 2, 2)
    assert w_same.gammas == pytest.approx(w.gammas, abs=1e-15)
    rho = 5 / 3  # (1 + 2*2) / (1 + 2*1)
    w_up = propagated_weights(w, 1, 2, 2)
    for g, gp in zip(w.gammas, w_up.gammas):
        assert gp == pytest.approx((4.0 * g) ** rho, rel=1e-12)
    wg = GeneralWeights(s=2, values={0b01: 0.5, 0b11: 0.1})
    wg_up = propagated_weights(wg, 1, 2, 2)
    assert wg_up.values[0b01] == pytest.approx((4.0 * 0.5) ** rho, abs=1e-12)
    assert wg_up.values[0b11] == pytest.approx((4.0**2 * 0.1) ** rho, abs=1e-12)


def test_propagation_check_constructed_rules():
    for b, m, s in ((2, 5, 2), (2, 7, 3), (3, 4, 2)):
        w = ProductWeights(tuple(1.0 / j for j in range(1, s + 1)))
        rule = cbc_fast(b, m, s, 2, 1, w)
        assert propagation_check(rule, 2)
        assert propagation_check(rule, 1)  # trivial at the same smoothness
        with pytest.raises(ValueError):
            propagation_check(rule, 3)  # target beyond the interlacing factor


def test_rule_bound_convenience():
    w = ProductWeights((1.0, 0.5))
    r5 = cbc_fast(2, 5, 2, 2, 2, w)
    r8 = cbc_fast(2, 8, 2, 2, 2, w)
    _, v5 = rule_bound(r5)
    _, v8 = rule_bound(r8)
    assert v8 < v5
    assert v5 >= r5.criterion_value
    assert v8 >= r8.criterion_value
