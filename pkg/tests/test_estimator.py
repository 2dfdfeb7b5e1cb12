"""Randomized integration driver: determinism, built-ins, error paths."""

import math

import numpy as np
import pytest

from polylat.cbc import cbc_fast
from polylat.criterion import ProductWeights
from polylat.estimator import (
    BUILTIN_KINDS,
    Integrand,
    builtin_integrand,
    integrate_once,
    rqmc_estimate,
)
from polylat.scramble import ScrambleConfig


@pytest.fixture(scope="module")
def rule():
    return cbc_fast(2, 6, 2, 1, 1, ProductWeights((1.0, 0.5)))


@pytest.fixture(scope="module")
def rule_d2():
    return cbc_fast(2, 5, 2, 2, 2, ProductWeights((1.0, 0.5)))


def test_constant_is_exact_for_any_seed(rule, rule_d2):
    f1 = builtin_integrand(2, "constant")
    assert integrate_once(f1, rule, ScrambleConfig(seed=123)) == 1.0
    assert integrate_once(f1, rule_d2, ScrambleConfig(seed=9, replication_id=3)) == 1.0
    res = rqmc_estimate(f1, rule, replications=5, seed=77)
    assert res.mean == 1.0
    assert res.sample_variance == 0.0
    assert res.estimates == (1.0,) * 5


def test_identity_hook_coordinate_average(rule):
    # unscrambled m-digit points average to (b^m - 1) / (2 b^m) per coordinate
    fx1 = Integrand(s=2, evaluate=lambda x: float(x[0]), exact_integral=0.5,
                    description="first coordinate")
    avg = integrate_once(fx1, rule, ScrambleConfig(identity=True), depth=rule.m)
    assert avg == (2**rule.m - 1) / (2.0 * 2**rule.m)


def test_linearity_of_single_estimate(rule):
    rng = np.random.default_rng(5)
    coef = rng.normal(size=(2, 3))

    def mk(a0, a1, c):
        return Integrand(s=2, evaluate=lambda x: a0 * x[0] + a1 * x[1] + c,
                         exact_integral=None, description="affine")

    f = mk(*coef[0])
    g = mk(*coef[1])
    a = 2.75
    fg = Integrand(s=2, evaluate=lambda x: a * f.evaluate(x) + g.evaluate(x),
                   exact_integral=None, description="combination")
    cfg = ScrambleConfig(seed=31, replication_id=2)
    lhs = integrate_once(fg, rule, cfg)
    rhs = a * integrate_once(f, rule, cfg) + integrate_once(g, rule, cfg)
    assert lhs == pytest.approx(rhs, abs=1e-12)


def test_error_paths(rule):
    with pytest.raises(ValueError):
        integrate_once(builtin_integrand(3, "constant"), rule, ScrambleConfig())
    with pytest.raises(ValueError):
        rqmc_estimate(builtin_integrand(2, "constant"), rule, replications=1)


def test_builtin_exact_integrals():
    assert builtin_integrand(1, "product_quadratic").exact_integral == 1 / 3
    assert builtin_integrand(2, "product_quadratic").exact_integral == pytest.approx(
        1 / 9, abs=1e-18
    )
    fs0 = builtin_integrand(3, "product_smooth", gamma=0.0)
    assert fs0.exact_integral == 1.0
    assert fs0.evaluate(np.array([0.3, 0.8, 0.1])) == 1.0
    fo = builtin_integrand(2, "oscillatory", u0=0.0, c=1.0)
    assert fo.exact_integral == pytest.approx(
        math.cos(1.0) * (math.sin(0.5) / 0.5) ** 2, abs=1e-15
    )


def test_builtin_rejects_unknown_kind_and_params():
    with pytest.raises(ValueError):
        builtin_integrand(2, "nope")
    with pytest.raises(ValueError):
        builtin_integrand(2, "constant", zzz=1)


def test_scalar_and_vector_paths_agree():
    pts = np.random.default_rng(5).random((50, 3))
    for kind in BUILTIN_KINDS:
        fb = builtin_integrand(3, kind)
        one_by_one = np.array([fb.evaluate(p) for p in pts])
        assert np.allclose(one_by_one, fb.values(pts), rtol=1e-13, atol=1e-15), kind


def test_mean_lands_near_exact(rule):
    fq2 = builtin_integrand(2, "product_quadratic")
    res = rqmc_estimate(fq2, rule, replications=200, seed=2024)
    assert abs(res.mean - fq2.exact_integral) <= 4 * res.stderr


def test_reproducible_and_thread_invariant(rule):
    fq2 = builtin_integrand(2, "product_quadratic")
    r1 = rqmc_estimate(fq2, rule, replications=8, seed=5)
    r2 = rqmc_estimate(fq2, rule, replications=8, seed=5)
    r8 = rqmc_estimate(fq2, rule, replications=8, seed=5, threads=8)
    assert r1 == r2 == r8
    assert rqmc_estimate(fq2, rule, replications=8, seed=6).estimates != r1.estimates


def test_variance_shrinks_with_point_count():
    fsm = builtin_integrand(1, "product_smooth", gamma=1.0)
    variances = []
    for m in range(4, 11):
        r = cbc_fast(2, m, 1, 1, 1, ProductWeights((1.0,)))
        variances.append(rqmc_estimate(fsm, r, replications=50, seed=3).sample_variance)
    inversions = sum(1 for a, b in zip(variances, variances[1:]) if b > a)
    assert inversions <= 1, variances


def test_result_serialization(rule):
    res = rqmc_estimate(builtin_integrand(2, "constant"), rule, replications=3, seed=1)
    d = res.to_dict()
    assert d["mean"] == 1.0
    assert d["replications"] == 3
    assert len(d["estimates"]) == 3
    assert res.stderr == math.sqrt(res.sample_variance / res.replications)
