"""End-to-end acceptance: one test per release gate, tolerances stated inline.

Each test is independent evidence that the package does what it claims:
kernel identities against a truncated Walsh series, criterion values against
a dual-lattice brute force, search equivalence, worst-case bound domination,
scrambling structure, decay-rate reproduction, estimator statistics, and
byte-level determinism.
"""

import itertools
import json
import math
import time

import numpy as np
import pytest

from polylat.bounds import lambda_grid, propagation_check, theorem_bound
from polylat.cbc import cbc_fast, cbc_naive
from polylat.cli import main as cli_main
from polylat.criterion import (
    GeneralWeights,
    ProductWeights,
    SmoothnessParams,
    criterion_bruteforce,
    criterion_general,
    criterion_partial,
    phi_from_digits,
)
from polylat.estimator import builtin_integrand, rqmc_estimate
from polylat.fieldpoly import ModulusContext, decode_poly
from polylat.points import generate_point_set
from polylat.scramble import ScrambleConfig, scramble_set


# ---------------------------------------------------------------------------
# truncated-series oracle for the per-digit kernel

SERIES_LENGTH = 20


def _zero_prefix_flags(Z: np.ndarray, L: int) -> np.ndarray:
    """flags[:, l] is true where the first l digits are all zero."""
    n, mz = Z.shape
    flags = np.ones((n, L + 1), dtype=bool)
    for l in range(1, L + 1):
        flags[:, l] = flags[:, l - 1]
        if l <= mz:
            flags[:, l] &= Z[:, l - 1] == 0
    return flags


def _series_oracle(Z: np.ndarray, exp2: int, base: int, L: int) -> np.ndarray:
    """sum_{k=1}^{base^L - 1} base^(-exp2 mu(k)) wal_k(z), exactly.

    Character sums over a full digit-length class collapse to prefix-zero
    indicators: sum_{k < base^l} wal_k(z) is base^l when the first l digits
    of z vanish and 0 otherwise.
    """
    flags = _zero_prefix_flags(Z, L)
    out = np.zeros(Z.shape[0])
    for ell in range(L):
        t_hi = np.where(flags[:, ell + 1], float(base) ** (ell + 1), 0.0)
        t_lo = np.where(flags[:, ell], float(base) ** ell, 0.0)
        out += float(base) ** (-exp2 * ell) * (t_hi - t_lo)
    return out


def _series_literal(Z: np.ndarray, exp2: int, base: int, L0: int) -> np.ndarray:
    """The same truncated series, summed index by index (no aggregation)."""
    ks = np.arange(1, base**L0, dtype=np.int64)
    kd = np.zeros((ks.size, L0), dtype=np.int64)
    rem = ks.copy()
    for i in range(L0):
        kd[:, i] = rem % base
        rem //= base
    powers = base ** np.arange(1, L0 + 1, dtype=np.int64)
    mu_k = np.searchsorted(powers, ks, side="right")
    r_k = float(base) ** (-exp2 * mu_k)
    dots = (Z[:, :L0].astype(np.int64) @ kd.T) % base
    wal_real = np.cos(2.0 * np.pi * dots / base)
    return wal_real @ r_k


def test_kernel_matches_truncated_walsh_series():
    # |phi(z) - series| <= 1e-9 for 1000 random 10-digit z per parameter set
    t0 = time.monotonic()
    rng = np.random.default_rng(20240901)
    for base, lit_len in ((2, 8), (3, 5), (5, 3)):
        Z = rng.integers(0, base, size=(1000, 10), dtype=np.int64)
        Z[0] = 0                      # the kernel's maximum
        Z[1] = 0; Z[1, 0] = 1         # first digit set
        Z[2] = 0; Z[2, -1] = 1        # deep first nonzero digit
        for alpha in (1, 2, 3):
            for d in (1, 2, 3):
                params = SmoothnessParams(alpha, d)
                exp2 = params.decay_exponent + 1
                series = _series_oracle(Z, exp2, base, SERIES_LENGTH)
                # self-check: aggregated class sums == literal index sums
                lit = _series_literal(Z, exp2, base, lit_len)
                agg = _series_oracle(Z, exp2, base, lit_len)
                assert np.max(np.abs(lit - agg)) <= 1e-11 * base
                worst = 0.0
                for row, want in zip(Z, series):
                    got = phi_from_digits(tuple(int(t) for t in row), params, base)
                    worst = max(worst, abs(got - want))
                assert worst <= 1e-9, (base, alpha, d, worst)
    assert time.monotonic() - t0 < 60.0


def test_criterion_matches_dual_lattice_bruteforce():
    # relative 1e-6 against dual enumeration with digit cutoff 8, b=2, m<=3
    t0 = time.monotonic()
    rng = np.random.default_rng(42)
    shapes = ((1, 1), (2, 1), (3, 1), (4, 1), (1, 2), (2, 2), (1, 3), (1, 4))
    for m in (1, 2, 3):
        ctx = ModulusContext.create(2, m)
        for s, d in shapes:
            for alpha in (1, 2):
                params = SmoothnessParams(alpha, d)
                for trial in range(2):
                    q = tuple(
                        decode_poly(int(rng.integers(1, 2**m)), 2)
                        for _ in range(s * d)
                    )
                    if trial == 0:
                        w = GeneralWeights.from_product(
                            ProductWeights(tuple(rng.random(s)))
                        )
                    else:
                        values = {}
                        for mask in range(1, 2**s):
                            if rng.random() < 0.7:
                                values[mask] = float(rng.random())
                        w = GeneralWeights(s=s, values=values)
                    got = criterion_general(q, ctx, params, w)
                    want = criterion_bruteforce(q, ctx, params, w, K=8)
                    assert got == pytest.approx(want, rel=1e-6), (m, s, d, alpha, trial)
    assert time.monotonic() - t0 < 300.0


def closed_form_single_component(b, m, alpha, d, gamma):
    c2 = 2 * min(alpha, d)
    c4 = 4 ** max(d - alpha, 0)
    return c4 * gamma * (b - 1) / (b ** ((c2 + 1) * m) * (1.0 - b**-c2))


def test_single_component_closed_form():
    # first-component criterion equals its closed form to 1e-12
    for b in (2, 3, 5):
        for m in (1, 2, 3, 4):
            ctx = ModulusContext.create(b, m)
            for alpha in (1, 2, 3):
                for d in (1, 2, 3):
                    params = SmoothnessParams(alpha, d)
                    for gamma in (1.0, 0.37):
                        got = criterion_partial(
                            ((1,),), ctx, params, ProductWeights((gamma,)), tau=1
                        )
                        want = closed_form_single_component(b, m, alpha, d, gamma)
                        assert abs(got - want) <= 1e-12, (b, m, alpha, d, gamma)
    # the anchor value, and independence from which component is used
    ctx22 = ModulusContext.create(2, 2)
    p11 = SmoothnessParams(1, 1)
    w1 = ProductWeights((1.0,))
    assert criterion_partial(((1,),), ctx22, p11, w1, tau=1) == pytest.approx(
        1 / 48, abs=1e-12
    )
    vals = {
        criterion_partial((decode_poly(r, 2),), ctx22, p11, w1, tau=1)
        for r in range(1, 4)
    }
    assert max(vals) - min(vals) <= 1e-15


GRID_BASES = (2, 3)
GRID_MS = (1, 2, 3, 4, 5, 6)
GRID_SS = (1, 2, 3, 4)
GRID_DS = (1, 2, 3)
GRID_WEIGHTS = ("flat", "decay")
GRID_ALPHAS = (1, 2, 3)


@pytest.fixture(scope="module")
def constructed_grid():
    """Every (b, m, s, d, weights, alpha) cell built both ways, timed."""
    t0 = time.monotonic()
    rules = {}
    for b in GRID_BASES:
        for m in GRID_MS:
            ctx = ModulusContext.create(b, m)
            for s in GRID_SS:
                for wname in GRID_WEIGHTS:
                    w = ProductWeights.from_spec(s, 1.0 if wname == "flat" else "j^-2")
                    for d in GRID_DS:
                        for alpha in GRID_ALPHAS:
                            key = (b, m, s, d, wname, alpha)
                            rules[key] = (
                                cbc_fast(b, m, s, d, alpha, w, ctx=ctx),
                                cbc_naive(b, m, s, d, alpha, w, ctx=ctx),
                            )
    return rules, time.monotonic() - t0


def test_fast_search_matches_exhaustive_search(constructed_grid):
    rules, build_seconds = constructed_grid
    assert len(rules) == 864
    mismatched = [
        key for key, (fast, naive) in rules.items() if fast.q != naive.q
    ]
    assert mismatched == []
    for fast, naive in rules.values():
        assert fast.criterion_value == pytest.approx(
            naive.criterion_value, rel=1e-10
        )
    assert build_seconds < 600.0


def test_criterion_dominated_by_worst_case_bound(constructed_grid):
    # constructed value <= bound for every prefix and every grid lambda
    rules, _ = constructed_grid
    violations = []
    for (b, m, s, d, wname, alpha), (fast, _naive) in rules.items():
        ctx = fast.context()
        params = SmoothnessParams(alpha, d)
        lams = lambda_grid(alpha, d).tolist()
        assert len(lams) == 33
        for tau in range(1, s * d + 1):
            crit = criterion_partial(fast.q, ctx, params, fast.weights, tau=tau)
            for lam in lams:
                tb = theorem_bound(tau, m, alpha, d, lam, fast.weights, b)
                if crit > tb * (1.0 + 1e-12):
                    violations.append((b, m, s, d, wname, alpha, tau, lam))
    assert violations == []


def test_smoothness_propagation_on_constructed_rules():
    # rules built at smoothness 1 keep their guarantees at any level up to d
    for d in (2, 3):
        for b, m, s in ((2, 5, 2), (2, 6, 3), (3, 3, 2)):
            w = ProductWeights.from_spec(s, "j^-2")
            rule = cbc_fast(b, m, s, d, 1, w)
            for alpha_prime in range(1, d + 1):
                assert propagation_check(rule, alpha_prime), (d, b, m, s, alpha_prime)


def _interval_shapes(dim: int, max_order: int):
    rng_counts = range(max_order + 1)
    for shape in itertools.product(rng_counts, repeat=dim):
        if 0 < sum(shape) <= max_order:
            yield shape


def test_scrambling_preserves_elementary_interval_structure():
    # box-count multisets over every interval shape survive scrambling
    for m in (4, 6, 8):
        ctx = ModulusContext.create(2, m)
        rule = cbc_fast(2, m, 4, 1, 1, ProductWeights.from_spec(4, 1.0), ctx=ctx)
        ps = generate_point_set(rule.q, ctx, depth=m)

        def prefix_table(pset):
            return [
                [None] + [pset.prefix_ints(j, k) for k in range(1, m + 1)]
                for j in range(4)
            ]

        def counts(table, shape):
            idx = np.zeros(2**m, dtype=np.int64)
            order = 0
            for j, dj in enumerate(shape):
                if dj:
                    idx = (idx << dj) | table[j][dj]
                    order += dj
            return np.sort(np.bincount(idx, minlength=2**order))

        before = prefix_table(ps)
        shapes = list(_interval_shapes(4, m))
        base_counts = {shape: counts(before, shape) for shape in shapes}
        for seed in range(20):
            out = scramble_set(ps, ScrambleConfig(seed=seed))
            after = prefix_table(out)
            bad = [
                shape
                for shape in shapes
                if not np.array_equal(base_counts[shape], counts(after, shape))
            ]
            assert bad == [], (m, seed, bad[:5])


def test_criterion_decay_slopes():
    # log2(criterion) per m: -3 +- 0.4 at s=1; -2.5/-3.5/-4.5 +- 0.5 at s=2
    t0 = time.monotonic()
    ms = list(range(4, 15))

    def slope(s, alpha, d):
        gamma = 4.0 ** -max(d - alpha, 0)
        w = ProductWeights((gamma,) * s)
        logs = [
            math.log2(cbc_fast(2, m, s, d, alpha, w).criterion_value) for m in ms
        ]
        return float(np.polyfit(ms, logs, 1)[0])

    assert abs(slope(1, 1, 1) - (-3.0)) <= 0.4
    for alpha, target in ((1, -2.5), (2, -3.5), (3, -4.5)):
        got = slope(2, alpha, alpha)
        assert abs(got - target) <= 0.5, (alpha, got, target)
    assert time.monotonic() - t0 < 600.0


def test_estimator_unbiased_and_variance_decay():
    t0 = time.monotonic()
    rule = cbc_fast(2, 6, 2, 1, 1, ProductWeights((1.0, 0.5)))
    cases = (
        ("constant", {}),
        ("product_quadratic", {}),
        ("product_smooth", {"gamma": "j^-2"}),
        ("oscillatory", {"u0": 0.3, "c": [1.0, 2.0]}),
    )
    for kind, kw in cases:
        f = builtin_integrand(2, kind, **kw)
        res = rqmc_estimate(f, rule, replications=1000, seed=99)
        assert abs(res.mean - f.exact_integral) <= 4.0 * res.stderr, (
            kind, res.mean, f.exact_integral, res.stderr,
        )
    # replicated variance falls like the criterion: slope at most -4.3
    fsm = builtin_integrand(1, "product_smooth", gamma=1.0)
    ms = list(range(6, 13))
    logs = []
    for m in ms:
        r = cbc_fast(2, m, 1, 2, 2, ProductWeights((1.0,)))
        v = rqmc_estimate(fsm, r, replications=100, seed=11).sample_variance
        logs.append(math.log2(v))
    vslope = float(np.polyfit(ms, logs, 1)[0])
    assert vslope <= -4.3, vslope
    assert time.monotonic() - t0 < 900.0


def test_end_to_end_determinism(tmp_path, capsys):
    def run(argv):
        assert cli_main(argv) == 0
        return capsys.readouterr().out

    construct = ["construct", "--b", "2", "--m", "5", "--s", "2", "--d", "2",
                 "--alpha", "2", "--weights", "product:1.0,0.5"]
    r1, r2 = tmp_path / "r1.json", tmp_path / "r2.json"
    out1 = run(construct + ["--out", str(r1)])
    out2 = run(construct + ["--out", str(r2)])
    assert r1.read_bytes() == r2.read_bytes()
    assert out1 == out2

    points = ["points", "--rule", str(r1), "--seed", "7"]
    p1, p2 = tmp_path / "p1.txt", tmp_path / "p2.txt"
    run(points + ["--out", str(p1)])
    run(points + ["--out", str(p2)])
    assert p1.read_bytes() == p2.read_bytes()

    integrate = ["integrate", "--rule", str(r1), "--integrand",
                 "product_quadratic", "--R", "16", "--seed", "5"]
    i1, i2, i8 = (tmp_path / n for n in ("i1.csv", "i2.csv", "i8.csv"))
    s1 = run(integrate + ["--threads", "1", "--out", str(i1)])
    s2 = run(integrate + ["--threads", "1", "--out", str(i2)])
    s8 = run(integrate + ["--threads", "8", "--out", str(i8)])
    assert i1.read_bytes() == i2.read_bytes() == i8.read_bytes()
    assert s1 == s2 == s8
    # the rule file itself is stable JSON: reading and re-writing changes nothing
    doc = json.loads(r1.read_text())
    assert json.dumps(doc, indent=1) + "\n" == r1.read_text()
