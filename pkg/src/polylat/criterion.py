"""Worst-case quality criterion of interlaced polynomial lattice rules.

The criterion B of a rule is a weighted sum, over the nonzero dual-lattice
index vectors, of digit-decay weights (see interlace.r_weight). It is
computable without touching the dual because the per-coordinate series
sum_{k>=1} r(k) wal_k(z) has the closed form implemented here as `phi`:
averaging products of phi values over the point set gives B exactly.

phi is evaluated from the index of the first nonzero digit of its argument,
never from a floating log, so equal inputs give bit-identical results in
every code path. All point averages go through math.fsum (exactly rounded),
which keeps construction tie-breaking deterministic.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence, Union

import numpy as np

from .fieldpoly import ModulusContext, Poly, encode_poly, normalize
from .interlace import mu, r_weight
from .points import dual_contains

MAX_GENERAL_DIMS = 20  # subset weights are addressed by bitmask


def _bpow(base: int, e: int) -> float:
    """base**e as a float with a single rounding (exact integer power first)."""
    if e >= 0:
        return float(base**e)
    return 1.0 / float(base ** (-e))


@dataclass(frozen=True)
class SmoothnessParams:
    """Smoothness target alpha and interlacing factor d (both >= 1)."""

    alpha: int
    d: int

    def __post_init__(self):
        if not (isinstance(self.alpha, int) and self.alpha >= 1):
            raise ValueError(f"alpha must be an int >= 1, got {self.alpha!r}")
        if not (isinstance(self.d, int) and self.d >= 1):
            raise ValueError(f"d must be an int >= 1, got {self.d!r}")

    @property
    def decay_exponent(self) -> int:
        """2 min(alpha, d): the digit-decay rate the criterion sees."""
        return 2 * min(self.alpha, self.d)

    @property
    def overshoot_factor(self) -> int:
        """4**max(d - alpha, 0): penalty when interlacing exceeds smoothness."""
        return 4 ** max(self.d - self.alpha, 0)


@dataclass(frozen=True)
class ProductWeights:
    """gamma_j >= 0 per output coordinate, j = 1..s."""

    gammas: tuple[float, ...]

    def __post_init__(self):
        for g in self.gammas:
            if not (g >= 0):
                raise ValueError(f"weights must be >= 0, got {g}")

    @property
    def s(self) -> int:
        return len(self.gammas)

    def gamma(self, j: int) -> float:
        """Weight of coordinate j (1-based)."""
        return self.gammas[j - 1]

    def gamma_of_mask(self, mask: int) -> float:
        out = 1.0
        j = 1
        while mask:
            if mask & 1:
                out *= self.gammas[j - 1]
            mask >>= 1
            j += 1
        return out

    @classmethod
    def from_spec(cls, s: int, spec: Union[float, str, Sequence[float]]) -> "ProductWeights":
        """Build from a scalar, a list, or a decay pattern like 'j^-2'."""
        if isinstance(spec, str):
            pat = spec.strip()
            if not pat.startswith("j^"):
                raise ValueError(f"unrecognized weight pattern {spec!r}")
            expo = float(pat[2:])
            return cls(tuple(float(j) ** expo for j in range(1, s + 1)))
        if isinstance(spec, (int, float)):
            return cls((float(spec),) * s)
        vals = tuple(float(v) for v in spec)
        if len(vals) != s:
            raise ValueError(f"expected {s} weights, got {len(vals)}")
        return cls(vals)


@dataclass(frozen=True)
class GeneralWeights:
    """Subset weights gamma_v >= 0, addressed by coordinate bitmask.

    Bit j-1 of a mask stands for coordinate j. Missing subsets weigh 0.
    """

    s: int
    values: dict

    def __post_init__(self):
        if self.s > MAX_GENERAL_DIMS:
            raise ValueError(f"general weights support at most {MAX_GENERAL_DIMS} coordinates")
        for mask, g in self.values.items():
            if not (0 < mask < 1 << self.s):
                raise ValueError(f"subset mask {mask} out of range for s={self.s}")
            if not (g >= 0):
                raise ValueError(f"weights must be >= 0, got {g}")

    def gamma_of_mask(self, mask: int) -> float:
        return self.values.get(mask, 0.0)

    @classmethod
    def from_entries(cls, s: int, entries: Sequence[tuple[Sequence[int], float]]) -> "GeneralWeights":
        """entries: (coordinate list (1-based), gamma) pairs."""
        values = {}
        for coords, g in entries:
            mask = 0
            for c in coords:
                if not 1 <= c <= s:
                    raise ValueError(f"coordinate {c} out of range 1..{s}")
                mask |= 1 << (c - 1)
            if mask == 0:
                raise ValueError("the empty subset carries no weight")
            if mask in values:
                raise ValueError(f"duplicate subset {sorted(coords)}")
            values[mask] = float(g)
        return cls(s=s, values=values)

    @classmethod
    def from_product(cls, pw: ProductWeights) -> "GeneralWeights":
        """All 2^s - 1 subset weights induced by product weights."""
        values = {}
        for mask in range(1, 1 << pw.s):
            values[mask] = pw.gamma_of_mask(mask)
        return cls(s=pw.s, values=values)


Weights = Union[ProductWeights, GeneralWeights]


def phi_floor_log(flog: Optional[int], params: SmoothnessParams, base: int) -> float:
    """The per-coordinate series value, from floor(log_base z).

    flog is None for z = 0 (the power term vanishes there). For z in (0, 1),
    flog = -(index of the first nonzero digit of z).
    """
    c2 = params.decay_exponent
    pw = 0.0 if flog is None else _bpow(base, c2 * flog)
    return (base - 1 - pw * (base ** (c2 + 1) - 1)) / (1 - _bpow(base, -c2))


def phi_from_digits(digits: Sequence[int], params: SmoothnessParams, base: int) -> float:
    """phi of a value given by its digits (digit l is the base**-(l+1) coefficient)."""
    for i, t in enumerate(digits):
        if t:
            return phi_floor_log(-(i + 1), params, base)
    return phi_floor_log(None, params, base)


def phi_from_ratio(k: int, m: int, params: SmoothnessParams, base: int) -> float:
    """phi of z = k / base**m for 0 <= k < base**m (exact digit index path)."""
    if not 0 <= k < base**m:
        raise ValueError(f"need 0 <= k < base**m, got k={k}, m={m}")
    if k == 0:
        return phi_floor_log(None, params, base)
    return phi_floor_log(mu(k, base) - m, params, base)


def phi_float(z: float, params: SmoothnessParams, base: int) -> float:
    """phi of a float in [0, 1); the digit index is located by exact comparisons."""
    if not 0.0 <= z < 1.0:
        raise ValueError(f"z must lie in [0, 1), got {z}")
    if z == 0.0:
        return phi_floor_log(None, params, base)
    # find e >= 1 with base**-e <= z < base**-(e-1), comparing exactly via the
    # integer ratio of z (no float log, no float powers)
    num, den = z.as_integer_ratio()
    e = max(1, round(-math.log(z) / math.log(base)))
    while num * base**e < den:  # z < base**-e
        e += 1
    while e > 1 and num * base ** (e - 1) >= den:  # z >= base**-(e-1)
        e -= 1
    return phi_floor_log(-e, params, base)


def _phi_by_digit_length(ctx: ModulusContext, params: SmoothnessParams) -> np.ndarray:
    """phi value of a coordinate whose packed residue has a given digit count.

    The expansion of r(x)/p(x) starts at digit position m - deg(r), so the
    first nonzero digit index of the coordinate value is m - mu(r) and phi
    depends on the residue only through its digit length (0 meaning r = 0).
    """
    key = ("phi_by_len", params.alpha, params.d)
    cached = ctx._caches.get(key)
    if cached is None:
        m = ctx.m
        vals = np.empty(m + 1, dtype=np.float64)
        vals[0] = phi_floor_log(None, params, ctx.base)
        for length in range(1, m + 1):
            vals[length] = phi_floor_log((length - 1) - m, params, ctx.base)
        vals.setflags(write=False)
        cached = vals
        ctx._caches[key] = cached
    return cached


def phi_matrix(q: Sequence[Poly], ctx: ModulusContext, params: SmoothnessParams) -> np.ndarray:
    """(b^m, len(q)) array of phi values of every coordinate of every point."""
    base, N = ctx.base, ctx.n_points
    order = max(ctx.unit_order, 1)
    lengths = ctx.digit_lengths()
    phi_by_len = _phi_by_digit_length(ctx, params)
    out = np.empty((N, len(q)), dtype=np.float64)
    log_n = ctx.log_table
    for t, qt in enumerate(q):
        qt = normalize(qt, base)
        if not qt:
            raise ValueError(f"component {t + 1} is zero")
        if len(qt) > ctx.m:
            raise ValueError(f"component {t + 1} has degree {len(qt) - 1}, needs < m={ctx.m}")
        log_q = int(log_n[encode_poly(qt, base)])
        resid = np.zeros(N, dtype=np.int64)
        if N > 1:
            resid[1:] = ctx.pow_table[(log_n[1:] + log_q) % order]
        out[:, t] = phi_by_len[lengths[resid]]
    return out


def _fsum(arr: np.ndarray) -> float:
    return math.fsum(arr.tolist())


def _check_nonnegative(value: float) -> float:
    if value < -1e-12:
        raise ArithmeticError(f"criterion came out negative ({value}); accumulation bug")
    return value


def criterion_partial(
    q: Sequence[Poly],
    ctx: ModulusContext,
    params: SmoothnessParams,
    weights: Weights,
    tau: Optional[int] = None,
) -> float:
    """Criterion of the first tau components (default: all of them).

    With beta = ceil(tau / d), completed blocks 1..beta-1 contribute full
    d-digit brackets and block beta contributes a bracket over its first
    tau - (beta-1)d coordinates; at tau = len(q) = d*s this is the full
    criterion. Product and general weights share this entry point.
    """
    q = tuple(normalize(c, ctx.base) for c in q)
    if tau is None:
        tau = len(q)
    if not 1 <= tau <= len(q):
        raise ValueError(f"tau must lie in [1, {len(q)}], got {tau}")
    d = params.d
    beta = -(-tau // d)
    trailing = tau - (beta - 1) * d  # columns of the last, possibly partial block
    N = ctx.n_points
    phi = phi_matrix(q[:tau], ctx, params)
    one_plus = 1.0 + phi
    # per-block products of (1 + phi)
    bp = np.empty((N, beta), dtype=np.float64)
    for j in range(beta - 1):
        bp[:, j] = one_plus[:, j * d : (j + 1) * d].prod(axis=1)
    bp[:, beta - 1] = one_plus[:, (beta - 1) * d : (beta - 1) * d + trailing].prod(axis=1)
    c4 = float(params.overshoot_factor)

    if isinstance(weights, ProductWeights):
        if weights.s < beta:
            raise ValueError(f"need weights for {beta} coordinates, got {weights.s}")
        total = np.ones(N, dtype=np.float64)
        for j in range(beta):
            cg = c4 * weights.gamma(j + 1)
            total *= (1.0 - cg) + cg * bp[:, j]
        return _check_nonnegative(-1.0 + _fsum(total) / N)

    if weights.s < beta:
        raise ValueError(f"need weights for {beta} coordinates, got {weights.s}")
    block_gain = bp - 1.0  # the -1 + prod(1 + phi) brackets
    acc = np.zeros(N, dtype=np.float64)
    allowed = (1 << beta) - 1
    for mask, gamma in sorted(weights.values.items()):
        if gamma == 0.0 or mask & ~allowed:
            continue
        term = np.full(N, gamma * c4 ** int(bin(mask).count("1")))
        mm = mask
        j = 0
        while mm:
            if mm & 1:
                term = term * block_gain[:, j]
            mm >>= 1
            j += 1
        acc += term
    return _check_nonnegative(_fsum(acc) / N)


def criterion_product(
    q: Sequence[Poly], ctx: ModulusContext, params: SmoothnessParams, gammas: Sequence[float]
) -> float:
    """Full criterion under product weights."""
    if len(q) % params.d:
        raise ValueError(f"{len(q)} components do not split into blocks of {params.d}")
    return criterion_partial(q, ctx, params, ProductWeights(tuple(float(g) for g in gammas)))


def criterion_general(
    q: Sequence[Poly], ctx: ModulusContext, params: SmoothnessParams, weights: GeneralWeights
) -> float:
    """Full criterion under general subset weights."""
    if len(q) % params.d:
        raise ValueError(f"{len(q)} components do not split into blocks of {params.d}")
    return criterion_partial(q, ctx, params, weights)


def _hi_part_sum(params: SmoothnessParams, base: int, m: int, K: int, exact_tail: bool) -> float:
    """Sum of digit-decay weights over the high digits of one coordinate.

    Indices k = lo + base**m * h with h >= 1 share mu(k) = m + mu(h) whatever
    the low part, so this sum is the per-coordinate add-on for every low part,
    zero or not. With exact_tail the cutoff h < base**(K-m) is completed by
    the exact geometric remainder (there are (base-1) base**j values of h with
    mu(h) = j).
    """
    e = params.decay_exponent + 1
    H = base ** (K - m)
    total = math.fsum(_bpow(base, -e * (m + mu(h, base))) for h in range(1, H))
    if exact_tail:
        j0 = K - m
        ratio = _bpow(base, 1 - e)
        total += (base - 1) * _bpow(base, -e * m) * _bpow(base, (1 - e) * j0) / (1.0 - ratio)
    return total


def criterion_bruteforce(
    q: Sequence[Poly],
    ctx: ModulusContext,
    params: SmoothnessParams,
    weights: Weights,
    K: int,
    tail: str = "exact",
    method: str = "structured",
) -> float:
    """Criterion straight from its dual-lattice definition (test oracle).

    Dual membership only sees the m lowest digits of each index, so the sum
    is organized by the low parts: enumerate all low vectors, test membership,
    and attach per-coordinate sums over the high digits up to the cutoff K.
    tail="exact" (default) completes each high-digit sum with its exact
    geometric remainder, making the result equal to the full infinite series;
    tail="truncate" keeps strictly the terms with every index below base**K.

    method="naive" enumerates every index vector in [0, base**K)^dim
    one by one (tiny scales only; used to validate the structured path).
    """
    base, m = ctx.base, ctx.m
    d = params.d
    ds = len(q)
    if ds % d:
        raise ValueError(f"{ds} components do not split into blocks of {d}")
    s = ds // d
    if K < m:
        raise ValueError(f"cutoff K={K} must be at least m={m}")
    exact_tail = {"exact": True, "truncate": False}[tail]
    q = tuple(normalize(c, ctx.base) for c in q)
    for t, qt in enumerate(q):
        if not qt or len(qt) > m:
            raise ValueError(f"component {t + 1} must be nonzero of degree < m={m}")
    c4 = float(params.overshoot_factor)

    def weight_factor(umask: int) -> float:
        # map input-coordinate support to output coordinates (blocks of d)
        outmask = 0
        t = 0
        mm = umask
        while mm:
            if mm & 1:
                outmask |= 1 << (t // d)
            mm >>= 1
            t += 1
        return c4 ** int(bin(outmask).count("1")) * weights.gamma_of_mask(outmask)

    if method == "naive":
        if (base**K) ** ds > 1 << 24:
            raise ValueError("naive enumeration is for tiny scales only")
        import itertools

        terms = []
        for kvec in itertools.product(range(base**K), repeat=ds):
            if not any(kvec):
                continue
            if not dual_contains(kvec, q, ctx):
                continue
            umask = 0
            for t, k in enumerate(kvec):
                if k:
                    umask |= 1 << t
            terms.append(weight_factor(umask) * r_weight(kvec, params.alpha, d, base))
        return math.fsum(terms)

    if method != "structured":
        raise ValueError(f"unknown method {method!r}")

    n = base**m
    if n**ds > 1 << 24:
        raise ValueError("low-part enumeration too large for this oracle")
    order = max(ctx.unit_order, 1)
    # digits of lo_t(x) * q_t(x) mod p, one (n, m) table per component
    mul_digit_tables = []
    for qt in q:
        log_q = int(ctx.log_table[encode_poly(qt, base)])
        prod = np.zeros(n, dtype=np.int64)
        if n > 1:
            prod[1:] = ctx.pow_table[(ctx.log_table[1:] + log_q) % order]
        digs = np.empty((n, m), dtype=np.int64)
        rem = prod.copy()
        for i in range(m):
            digs[:, i] = rem % base
            rem //= base
        mul_digit_tables.append(digs)

    # membership over the full low-part grid, vectorized
    grids = np.meshgrid(*([np.arange(n)] * ds), indexing="ij")
    lows = np.stack([g.reshape(-1) for g in grids], axis=1)  # (n^ds, ds)
    digit_sum = np.zeros((lows.shape[0], m), dtype=np.int64)
    for t in range(ds):
        digit_sum += mul_digit_tables[t][lows[:, t]]
    member = ~np.any(digit_sum % base, axis=1)
    members = lows[member]

    e = params.decay_exponent + 1
    hi_sum = _hi_part_sum(params, base, m, K, exact_tail)
    # factor for a nonzero low part with a given digit length, high digits summed
    factor_by_len = np.array(
        [0.0] + [_bpow(base, -e * (length - 1)) + hi_sum for length in range(1, m + 1)]
    )
    lengths = ctx.digit_lengths()

    terms = []
    for lo in members:
        nz = [t for t in range(ds) if lo[t]]
        zeros = [t for t in range(ds) if not lo[t]]
        base_factor = 1.0
        base_mask = 0
        for t in nz:
            base_factor *= factor_by_len[lengths[lo[t]]]
            base_mask |= 1 << t
        # each zero low part is either absent (k_t = 0) or a pure high part
        for wbits in range(1 << len(zeros)):
            umask = base_mask
            f = base_factor
            for i, t in enumerate(zeros):
                if wbits >> i & 1:
                    umask |= 1 << t
                    f *= hi_sum
            if umask == 0:
                continue  # the k = 0 term is excluded
            terms.append(weight_factor(umask) * f)
    return math.fsum(terms)
