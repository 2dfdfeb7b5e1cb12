"""Component-by-component construction of generating vectors.

Each step keeps two running vectors over the points: P (product of the
brackets of completed coordinate blocks) and Q (partial product inside the
current block). The candidate objective is then a weighted sum of phi values
which, over the nonzero points indexed by powers of a group generator, is a
circular correlation, so one convolution evaluates every candidate at once.

Precision: at larger m the spread between candidate objectives sinks far
below the rounding of any O(1) double intermediate, so P, Q and the phi
tables are kept in paired doubles (hi + lo, ~106 bits), reductions go
through math.fsum (exactly rounded, order independent), and the fast path
computes the correlation exactly: both sequences are scaled by a power of
two into integers, packed into two big integers with fixed-width slots, and
multiplied once, which performs the cyclic convolution with no rounding at
all. Selections therefore never depend on convolution roundoff or on the
choice of generator, and the fast and naive paths pick identical components.

cyclic_convolution below is the plain float transform utility (power-of-two
padded FFT with a direct quadratic fallback); the construction itself only
trusts the integer path.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional, TextIO, Union

import numpy as np

from .criterion import (
    GeneralWeights,
    ProductWeights,
    SmoothnessParams,
    Weights,
    criterion_partial,
)
from .fieldpoly import (
    ModulusContext,
    Poly,
    decode_poly,
    encode_poly,
    normalize,
)

RULE_FORMAT = "polylat-rule v1"
TIE_REL = 1e-12  # tie-bucket width relative to the per-step candidate mean
BRACKET_FLOOR = 1e-300

# ---------------------------------------------------------------------------
# paired-double arithmetic (error-free transformations, vectorized)

_SPLITTER = 134217729.0  # 2**27 + 1


def _two_sum(a, b):
    s = a + b
    bb = s - a
    return s, (a - (s - bb)) + (b - bb)


def _fast_two_sum(a, b):
    # requires |a| >= |b| elementwise, which holds after a two_sum/two_prod
    s = a + b
    return s, b - (s - a)


def _two_prod(a, b):
    p = a * b
    ta = _SPLITTER * a
    ahi = ta - (ta - a)
    alo = a - ahi
    tb = _SPLITTER * b
    bhi = tb - (tb - b)
    blo = b - bhi
    return p, ((ahi * bhi - p) + ahi * blo + alo * bhi) + alo * blo


def dd_add(x, y):
    """(hi, lo) + (hi, lo)."""
    s, e = _two_sum(x[0], y[0])
    e = e + (x[1] + y[1])
    return _fast_two_sum(s, e)


def dd_mul(x, y):
    """(hi, lo) * (hi, lo)."""
    p, e = _two_prod(x[0], y[0])
    e = e + (x[0] * y[1] + x[1] * y[0])
    return _fast_two_sum(p, e)


def dd_scale(x, c: float):
    """(hi, lo) * plain double."""
    p, e = _two_prod(x[0], c)
    e = e + x[1] * c
    return _fast_two_sum(p, e)


def dd_add_d(x, c):
    s, e = _two_sum(x[0], c)
    e = e + x[1]
    return _fast_two_sum(s, e)


def dd_const(value: float, shape) -> tuple:
    return np.full(shape, value), np.zeros(shape)


def dd_from_fraction(fr: Fraction) -> tuple[float, float]:
    """Exact split of a rational into hi + lo doubles."""
    hi = float(fr)
    lo = float(fr - Fraction(hi))
    return hi, lo


def dd_fsum(x) -> float:
    """Exactly rounded sum of a paired-double array (order independent)."""
    return math.fsum(np.concatenate((np.ravel(x[0]), np.ravel(x[1]))).tolist())


# ---------------------------------------------------------------------------
# phi tables in paired doubles


def _phi_fraction(flog: Optional[int], params: SmoothnessParams, base: int) -> Fraction:
    c2 = params.decay_exponent
    pw = Fraction(0) if flog is None else Fraction(base) ** (c2 * flog)
    num = (base - 1) - pw * (base ** (c2 + 1) - 1)
    return num / (1 - Fraction(base) ** (-c2))


def _phi_dd_by_length(ctx: ModulusContext, params: SmoothnessParams):
    """Paired-double phi per residue digit length (index 0 meaning residue 0)."""
    key = ("phi_dd_by_len", params.alpha, params.d)
    cached = ctx._caches.get(key)
    if cached is None:
        m = ctx.m
        hi = np.empty(m + 1)
        lo = np.empty(m + 1)
        hi[0], lo[0] = dd_from_fraction(_phi_fraction(None, params, ctx.base))
        for length in range(1, m + 1):
            hi[length], lo[length] = dd_from_fraction(
                _phi_fraction((length - 1) - m, params, ctx.base)
            )
        hi.setflags(write=False)
        lo.setflags(write=False)
        cached = (hi, lo)
        ctx._caches[key] = cached
    return cached


def _phi_dd_of_residues(resid: np.ndarray, ctx: ModulusContext, params: SmoothnessParams):
    hi, lo = _phi_dd_by_length(ctx, params)
    lengths = ctx.digit_lengths()[resid]
    return hi[lengths], lo[lengths]


def _candidate_residues(ctx: ModulusContext) -> np.ndarray:
    """All admissible components as packed residues, 1..b^m-1."""
    return np.arange(1, ctx.n_points, dtype=np.int64)


def _canonical_rank(resid: np.ndarray, base: int, m: int) -> np.ndarray:
    """Position of each packed residue in canonical polynomial order."""
    rank = np.zeros_like(resid)
    rem = resid.copy()
    for _ in range(m):
        rank = rank * base + rem % base  # digit i is the i-th comparison key
        rem //= base
    return rank


# ---------------------------------------------------------------------------
# construction state


@dataclass(eq=False)
class CbcState:
    """P/Q bookkeeping for product-weight construction.

    P holds the product of completed block brackets per point, Q the partial
    product of (1 + phi) inside the current block; Q is all ones exactly at
    block boundaries. Both are paired-double pairs of arrays.
    """

    P_pair: tuple
    Q_pair: tuple
    tau: int
    chosen: tuple[Poly, ...]

    @property
    def P(self) -> np.ndarray:
        return self.P_pair[0] + self.P_pair[1]

    @property
    def Q(self) -> np.ndarray:
        return self.Q_pair[0] + self.Q_pair[1]


def initial_state(ctx: ModulusContext) -> CbcState:
    n = ctx.n_points
    return CbcState(P_pair=dd_const(1.0, n), Q_pair=dd_const(1.0, n), tau=0, chosen=())


def _component_phi(q_new: Poly, ctx: ModulusContext, params: SmoothnessParams):
    """Paired-double phi of every point's coordinate for one component."""
    q_new = normalize(q_new, ctx.base)
    if not q_new or len(q_new) > ctx.m:
        raise ValueError(f"component must be nonzero of degree < m={ctx.m}")
    order = max(ctx.unit_order, 1)
    log_q = int(ctx.log_table[encode_poly(q_new, ctx.base)])
    resid = np.zeros(ctx.n_points, dtype=np.int64)
    if ctx.n_points > 1:
        resid[1:] = ctx.pow_table[(ctx.log_table[1:] + log_q) % order]
    return _phi_dd_of_residues(resid, ctx, params)


def update_state(
    state: CbcState,
    q_new: Poly,
    ctx: ModulusContext,
    params: SmoothnessParams,
    weights: ProductWeights,
) -> CbcState:
    """Append one component: absorb the block bracket into P at block ends."""
    if not isinstance(weights, ProductWeights):
        raise ValueError("P/Q state tracking applies to product weights only")
    q_new = normalize(q_new, ctx.base)
    tau = state.tau + 1
    beta = -(-tau // params.d)
    phi = _component_phi(q_new, ctx, params)
    q_pair = dd_mul(state.Q_pair, dd_add_d(phi, 1.0))
    if tau % params.d == 0:
        cg = float(params.overshoot_factor) * weights.gamma(beta)
        bracket = dd_add_d(dd_scale(q_pair, cg), 1.0 - cg)
        finite = np.abs(bracket[0])
        if np.any((finite > 0) & (finite < BRACKET_FLOOR)):
            raise ArithmeticError("block bracket underflowed; weights out of supported range")
        p_pair = dd_mul(state.P_pair, bracket)
        q_pair = dd_const(1.0, ctx.n_points)
    else:
        p_pair = state.P_pair
    return CbcState(P_pair=p_pair, Q_pair=q_pair, tau=tau, chosen=state.chosen + (q_new,))


def state_criterion(
    state: CbcState, ctx: ModulusContext, params: SmoothnessParams, weights: ProductWeights
) -> float:
    """Criterion of the chosen prefix straight from the state vectors."""
    if state.tau == 0:
        return 0.0
    if state.tau % params.d == 0:
        terms = dd_add_d(state.P_pair, -1.0)
    else:
        beta = -(-state.tau // params.d)
        cg = float(params.overshoot_factor) * weights.gamma(beta)
        bracket = dd_add_d(dd_scale(state.Q_pair, cg), 1.0 - cg)
        terms = dd_add_d(dd_mul(state.P_pair, bracket), -1.0)
    return dd_fsum(terms) / ctx.n_points


# ---------------------------------------------------------------------------
# rule records


@dataclass(frozen=True)
class RuleSpec:
    """A constructed rule: parameters, generating vector, criterion value."""

    b: int
    m: int
    s: int
    d: int
    alpha: int
    p: Poly
    q: tuple[Poly, ...]
    weights: Weights
    criterion_value: float
    construction: str

    @property
    def n_points(self) -> int:
        return self.b**self.m

    def context(self) -> ModulusContext:
        return ModulusContext.create(self.b, self.m, p=self.p)

    def to_dict(self) -> dict:
        return {
            "format": RULE_FORMAT,
            "b": self.b,
            "m": self.m,
            "s": self.s,
            "d": self.d,
            "alpha": self.alpha,
            "p": list(self.p),
            "q": [list(c) for c in self.q],
            "weights": weights_to_dict(self.weights),
            "criterion_value": self.criterion_value,
            "construction": self.construction,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "RuleSpec":
        fmt = data.get("format")
        if fmt != RULE_FORMAT:
            raise ValueError(f"unsupported rule format {fmt!r}")
        return cls(
            b=int(data["b"]),
            m=int(data["m"]),
            s=int(data["s"]),
            d=int(data["d"]),
            alpha=int(data["alpha"]),
            p=tuple(int(c) for c in data["p"]),
            q=tuple(tuple(int(c) for c in comp) for comp in data["q"]),
            weights=weights_from_dict(data["weights"]),
            criterion_value=float(data["criterion_value"]),
            construction=str(data["construction"]),
        )


def weights_to_dict(weights: Weights) -> dict:
    if isinstance(weights, ProductWeights):
        return {"type": "product", "gammas": list(weights.gammas)}
    entries = [
        {"coords": [j + 1 for j in range(weights.s) if mask >> j & 1], "gamma": g}
        for mask, g in sorted(weights.values.items())
    ]
    return {"type": "general", "s": weights.s, "entries": entries}


def weights_from_dict(data: dict) -> Weights:
    kind = data.get("type")
    if kind == "product":
        return ProductWeights(tuple(float(g) for g in data["gammas"]))
    if kind == "general":
        return GeneralWeights.from_entries(
            int(data["s"]), [(e["coords"], float(e["gamma"])) for e in data["entries"]]
        )
    raise ValueError(f"unknown weights type {kind!r}")


def save_rule(rule: RuleSpec, fp: Union[str, TextIO]) -> None:
    if isinstance(fp, str):
        with open(fp, "w", encoding="utf-8") as f:
            json.dump(rule.to_dict(), f, indent=1)
            f.write("\n")
    else:
        json.dump(rule.to_dict(), fp, indent=1)
        fp.write("\n")


def load_rule(fp: Union[str, TextIO]) -> RuleSpec:
    if isinstance(fp, str):
        with open(fp, "r", encoding="utf-8") as f:
            return RuleSpec.from_dict(json.load(f))
    return RuleSpec.from_dict(json.load(fp))


# ---------------------------------------------------------------------------
# float convolution utility


def cyclic_convolution(a: np.ndarray, c: np.ndarray) -> np.ndarray:
    """FFT cyclic convolution: out[j] = sum_k a[k] c[(j - k) mod L]."""
    a = np.asarray(a, dtype=np.float64)
    c = np.asarray(c, dtype=np.float64)
    L = a.shape[0]
    if c.shape[0] != L:
        raise ValueError("length mismatch")
    if L == 1:
        return a * c
    pad = 1 << (2 * L - 2).bit_length()
    full = np.fft.irfft(np.fft.rfft(a, pad) * np.fft.rfft(c, pad), pad)[: 2 * L - 1]
    out = full[:L].copy()
    out[: L - 1] += full[L:]
    return out


def cyclic_convolution_direct(a: np.ndarray, c: np.ndarray) -> np.ndarray:
    """O(L^2) reference convolution for verification."""
    a = np.asarray(a, dtype=np.float64)
    c = np.asarray(c, dtype=np.float64)
    L = a.shape[0]
    out = np.empty(L)
    idx = np.arange(L)
    for j in range(L):
        out[j] = a @ c[(j - idx) % L]
    return out


# ---------------------------------------------------------------------------
# exact integer correlation (the fast path's convolution)


def _dd_to_ints(hi: np.ndarray, lo: np.ndarray, cap: int = 640) -> tuple[list, int]:
    """Scale a paired-double sequence by 2^kappa into integers.

    kappa is chosen so every hi and lo part becomes integral (exact), capped
    so the packed integers stay small; past the cap low-order bits are
    truncated elementwise, which perturbs values by < 2^-cap and preserves
    equality of equal inputs.
    """
    exps = []
    for part in (hi, lo):
        nz = part != 0.0
        if np.any(nz):
            exps.append(int(np.frexp(part[nz])[1].min()))
    if not exps:
        return [0] * hi.shape[0], 0
    kappa = min(53 - min(exps), cap)
    top = max(int(np.frexp(hi)[1].max()), int(np.frexp(lo)[1].max()))
    kappa = min(kappa, 1015 - top)  # keep ldexp below float overflow
    out = [
        int(math.ldexp(h, kappa)) + int(math.ldexp(l, kappa))
        for h, l in zip(hi.tolist(), lo.tolist())
    ]
    return out, kappa


def _exact_correlation(a_ints: list, c_ints: list) -> list:
    """corr[j] = sum_i a[i] * c[(i+j) mod L], exactly, via one big multiply.

    Both sequences are biased nonnegative, packed into fixed-width slots of
    two big integers, and multiplied; the slots of the product are the linear
    convolution of the index-reversed a with c, folded to cyclic length and
    debiased. Big-integer multiplication beats per-candidate summation by
    orders of magnitude and introduces no rounding.
    """
    L = len(a_ints)
    if len(c_ints) != L:
        raise ValueError("length mismatch")
    rev = [a_ints[0]] + a_ints[:0:-1]  # conv with rev == correlation with a
    ba = max(max(rev), -min(rev), 1).bit_length() + 1
    bc = max(max(c_ints), -min(c_ints), 1).bit_length() + 1
    bias_a = 1 << ba
    bias_c = 1 << bc
    wb = (ba + bc + 2 + max((L - 1).bit_length(), 1) + 2 + 7) // 8  # slot bytes
    X = int.from_bytes(
        b"".join((v + bias_a).to_bytes(wb, "little") for v in rev), "little"
    )
    Y = int.from_bytes(
        b"".join((v + bias_c).to_bytes(wb, "little") for v in c_ints), "little"
    )
    raw = (X * Y).to_bytes(2 * L * wb, "little")
    lin = [
        int.from_bytes(raw[t * wb : (t + 1) * wb], "little") for t in range(2 * L - 1)
    ]
    const = bias_a * (sum(c_ints) + L * bias_c) + bias_c * sum(a_ints)
    return [
        lin[j] + (lin[j + L] if j + L < 2 * L - 1 else 0) - const for j in range(L)
    ]


def _int_ldexp(v: int, e: int) -> float:
    """float(v) * 2^e for arbitrarily large v (drops bits beyond 1000)."""
    nb = v.bit_length()
    if nb > 1000:
        sh = nb - 1000
        v >>= sh
        e += sh
    return math.ldexp(float(v), e)


# ---------------------------------------------------------------------------
# shared step helpers


def _gamma_block(params: SmoothnessParams, weights: ProductWeights, beta: int) -> float:
    return float(params.overshoot_factor) * weights.gamma(beta)


def _pick(bvals: dict, mean_obj: float, base: int, m: int) -> int:
    """Canonically smallest candidate within the tie bucket of the minimum."""
    best = min(bvals.values())
    width = TIE_REL * max(abs(mean_obj), abs(best))
    tied = np.array([r for r, v in bvals.items() if v <= best + width], dtype=np.int64)
    ranks = _canonical_rank(tied, base, m)
    return int(tied[np.argmin(ranks)])


def _step_checks(best: float, mean_obj: float, prev_b: float) -> None:
    scale = max(1.0, abs(mean_obj), abs(prev_b))
    # the step minimum can never exceed the candidate average, and appending
    # a component can never lower the criterion
    if best > mean_obj + 1e-9 * scale:
        raise ArithmeticError(f"step minimum {best} above candidate mean {mean_obj}")
    if best < prev_b - 1e-12 * scale:
        raise ArithmeticError(f"criterion dropped from {prev_b} to {best}")


def _check_weight_dims(weights: Weights, s: int) -> None:
    if weights.s < s:
        raise ValueError(f"weights cover {weights.s} coordinates, rule needs {s}")


def _resolve_context(
    base: int,
    m: int,
    ctx: Optional[ModulusContext],
    modulus: Optional[Poly],
    generator: Optional[Poly],
) -> ModulusContext:
    if ctx is not None:
        if ctx.base != base or ctx.m != m:
            raise ValueError("supplied context does not match b, m")
        return ctx
    return ModulusContext.create(base, m, p=modulus, generator=generator)


def _winner_zero_gamma(ctx: ModulusContext) -> Poly:
    cands = _candidate_residues(ctx)
    ranks = _canonical_rank(cands, ctx.base, ctx.m)
    return decode_poly(int(cands[np.argmin(ranks)]), ctx.base)


def _final_criterion_dd(
    q: tuple, ctx: ModulusContext, params: SmoothnessParams, weights: Weights
) -> float:
    """Full-precision criterion of a complete vector."""
    n = ctx.n_points
    phis = [_component_phi(c, ctx, params) for c in q]
    d = params.d
    s = len(q) // d
    if isinstance(weights, ProductWeights):
        total = dd_const(1.0, n)
        for j in range(1, s + 1):
            acc = dd_const(1.0, n)
            for k in range((j - 1) * d, j * d):
                acc = dd_mul(acc, dd_add_d(phis[k], 1.0))
            cg = _gamma_block(params, weights, j)
            total = dd_mul(total, dd_add_d(dd_scale(dd_add_d(acc, -1.0), cg), 1.0))
        return dd_fsum(dd_add_d(total, -1.0)) / n
    gains = []
    for j in range(1, s + 1):
        acc = dd_const(1.0, n)
        for k in range((j - 1) * d, j * d):
            acc = dd_mul(acc, dd_add_d(phis[k], 1.0))
        gains.append(dd_add_d(acc, -1.0))
    c4 = float(params.overshoot_factor)
    total = dd_const(0.0, n)
    allowed = (1 << s) - 1
    for mask, gamma in sorted(weights.values.items()):
        if gamma == 0.0 or mask & ~allowed:
            continue
        term = dd_const(gamma * c4 ** int(bin(mask).count("1")), n)
        mm = mask
        j = 0
        while mm:
            if mm & 1:
                term = dd_mul(term, gains[j])
            mm >>= 1
            j += 1
        total = dd_add(total, term)
    return dd_fsum(total) / n


# ---------------------------------------------------------------------------
# naive construction


def _naive_candidate_values(
    state_polys: tuple,
    ctx: ModulusContext,
    params: SmoothnessParams,
    weights: Weights,
) -> dict:
    """Criterion of prefix+candidate for every candidate, rebuilt from scratch.

    Paired-double throughout; per-point totals are formed as (product - 1) so
    the result keeps full precision even when the sum is many orders below 1.
    """
    n = ctx.n_points
    d = params.d
    tau = len(state_polys) + 1
    beta = -(-tau // d)
    cands = _candidate_residues(ctx)
    order = max(ctx.unit_order, 1)

    chosen_phi = [_component_phi(c, ctx, params) for c in state_polys]
    # candidate phi pairs, shaped (points, candidates)
    log_c = ctx.log_table[cands]
    resid = np.zeros((n, cands.shape[0]), dtype=np.int64)
    if n > 1:
        resid[1:] = ctx.pow_table[(ctx.log_table[1:, None] + log_c[None, :]) % order]
    cand_phi = _phi_dd_of_residues(resid, ctx, params)

    def col(x):
        return x[0][:, None], x[1][:, None]

    def block_gain(lo: int, hi: int):
        # prod over chosen coords lo..hi-1 of (1 + phi), minus 1
        acc = dd_const(1.0, n)
        for k in range(lo, hi):
            acc = dd_mul(acc, dd_add_d(chosen_phi[k], 1.0))
        return dd_add_d(acc, -1.0)

    part = dd_const(1.0, n)  # partial product of the open block, candidate excluded
    for k in range((beta - 1) * d, tau - 1):
        part = dd_mul(part, dd_add_d(chosen_phi[k], 1.0))

    if isinstance(weights, ProductWeights):
        prefix = dd_const(1.0, n)
        for j in range(1, beta):
            cg = _gamma_block(params, weights, j)
            prefix = dd_mul(prefix, dd_add_d(dd_scale(block_gain((j - 1) * d, j * d), cg), 1.0))
        cg = _gamma_block(params, weights, beta)
        gain = dd_add_d(dd_mul(col(part), dd_add_d(cand_phi, 1.0)), -1.0)
        terms = dd_mul(col(prefix), dd_add_d(dd_scale(gain, cg), 1.0))
        terms = dd_add_d(terms, -1.0)
    else:
        gains = [block_gain((j - 1) * d, j * d) for j in range(1, beta)]
        gain_beta = dd_add_d(dd_mul(col(part), dd_add_d(cand_phi, 1.0)), -1.0)
        c4 = float(params.overshoot_factor)
        fixed = dd_const(0.0, n)  # subsets not touching the open block
        cand_part = dd_const(0.0, (n, cands.shape[0]))
        allowed = (1 << beta) - 1
        for mask, gamma in sorted(weights.values.items()):
            if gamma == 0.0 or mask & ~allowed:
                continue
            inner = dd_const(gamma * c4 ** int(bin(mask).count("1")), n)
            mm = mask & ~(1 << (beta - 1))
            j = 1
            while mm:
                if mm & 1:
                    inner = dd_mul(inner, gains[j - 1])
                mm >>= 1
                j += 1
            if mask >> (beta - 1) & 1:
                cand_part = dd_add(cand_part, dd_mul(col(inner), gain_beta))
            else:
                fixed = dd_add(fixed, inner)
        terms = dd_add(col(fixed), cand_part)

    out = {}
    for i, r in enumerate(cands.tolist()):
        out[r] = math.fsum(np.concatenate((terms[0][:, i], terms[1][:, i])).tolist()) / n
    return out


def cbc_naive(
    base: int,
    m: int,
    s: int,
    d: int,
    alpha: int,
    weights: Weights,
    ctx: Optional[ModulusContext] = None,
    modulus: Optional[Poly] = None,
    generator: Optional[Poly] = None,
) -> RuleSpec:
    """Exhaustive construction: every step re-evaluates every candidate."""
    params = SmoothnessParams(alpha, d)
    ctx = _resolve_context(base, m, ctx, modulus, generator)
    _check_weight_dims(weights, s)
    chosen: tuple[Poly, ...] = ((1,),)
    prev_b = criterion_partial(chosen, ctx, params, weights, tau=1)
    for _ in range(2, s * d + 1):
        bvals = _naive_candidate_values(chosen, ctx, params, weights)
        mean_obj = math.fsum(bvals.values()) / len(bvals)
        _step_checks(min(bvals.values()), mean_obj, prev_b)
        winner = _pick(bvals, mean_obj, base, m)
        prev_b = bvals[winner]
        chosen = chosen + (decode_poly(winner, base),)
    return RuleSpec(
        b=base, m=m, s=s, d=d, alpha=alpha, p=ctx.p, q=chosen, weights=weights,
        criterion_value=_final_criterion_dd(chosen, ctx, params, weights),
        construction="naive",
    )


# ---------------------------------------------------------------------------
# fast construction


def cbc_fast(
    base: int,
    m: int,
    s: int,
    d: int,
    alpha: int,
    weights: ProductWeights,
    ctx: Optional[ModulusContext] = None,
    modulus: Optional[Poly] = None,
    generator: Optional[Poly] = None,
) -> RuleSpec:
    """Correlation-based construction; selections match cbc_naive exactly."""
    if not isinstance(weights, ProductWeights):
        raise ValueError("fast construction requires product weights")
    params = SmoothnessParams(alpha, d)
    ctx = _resolve_context(base, m, ctx, modulus, generator)
    _check_weight_dims(weights, s)
    n = ctx.n_points
    L = max(ctx.unit_order, 1)
    state = update_state(initial_state(ctx), (1,), ctx, params, weights)

    # ring order: position i holds the packed residue of g^i
    ring = ctx.pow_table
    phi_hi, phi_lo = _phi_dd_by_length(ctx, params)
    ring_len = ctx.digit_lengths()[ring]
    c_ints, k_c = _dd_to_ints(phi_hi[ring_len], phi_lo[ring_len])
    sum_c = sum(c_ints)
    phi0 = (phi_hi[0], phi_lo[0])
    ring_list = ring.tolist()

    for tau in range(2, s * d + 1):
        beta = -(-tau // params.d)
        cg = _gamma_block(params, weights, beta)
        if cg == 0.0:
            # the bracket is 1 whatever the candidate; all of them tie
            state = update_state(state, _winner_zero_gamma(ctx), ctx, params, weights)
            continue

        a_pair = dd_mul(state.P_pair, state.Q_pair)
        a0_term = dd_mul((a_pair[0][0], a_pair[1][0]), phi0)
        a0 = float(a0_term[0]) + float(a0_term[1])
        a_ints, k_a = _dd_to_ints(a_pair[0][ring], a_pair[1][ring])
        corr = _exact_correlation(a_ints, c_ints)
        shift = -(k_a + k_c)

        prev_b = state_criterion(state, ctx, params, weights)
        scale = cg / n
        bvals = {}
        for j, t in enumerate(corr):
            bvals[ring_list[j]] = prev_b + scale * (a0 + _int_ldexp(t, shift))
        mean_obj = prev_b + scale * (a0 + _int_ldexp(sum(a_ints) * sum_c, shift) / L)
        _step_checks(min(bvals.values()), mean_obj, prev_b)
        winner = _pick(bvals, mean_obj, base, m)
        state = update_state(state, decode_poly(winner, base), ctx, params, weights)

    return RuleSpec(
        b=base, m=m, s=s, d=d, alpha=alpha, p=ctx.p, q=state.chosen, weights=weights,
        criterion_value=_final_criterion_dd(state.chosen, ctx, params, weights),
        construction="fast",
    )


def construct(
    base: int,
    m: int,
    s: int,
    d: int,
    alpha: int,
    weights: Weights,
    method: str = "fast",
    ctx: Optional[ModulusContext] = None,
    modulus: Optional[Poly] = None,
    generator: Optional[Poly] = None,
) -> RuleSpec:
    """Build a rule; method 'fast' needs product weights, 'naive' takes any."""
    if method == "fast":
        if not isinstance(weights, ProductWeights):
            raise ValueError("fast construction requires product weights; use method='naive'")
        return cbc_fast(base, m, s, d, alpha, weights, ctx=ctx, modulus=modulus, generator=generator)
    if method == "naive":
        return cbc_naive(base, m, s, d, alpha, weights, ctx=ctx, modulus=modulus, generator=generator)
    raise ValueError(f"unknown construction method {method!r}")
