"""Point sets of polynomial lattice rules, stored digit by digit.

A rule with modulus p of degree m and generating vector q = (q_1, ..., q_dim)
has b^m points; coordinate j of point n is the expansion of n(x) q_j(x) / p(x)
in negative powers of x, mapped to [0, 1). Digits are kept explicitly (depth
digits per coordinate) because scrambling and interlacing act on digits, not
on floats. Digits beyond position m continue the same long division, so they
are genuine expansion digits rather than zero padding.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .fieldpoly import (
    ModulusContext,
    Poly,
    degree,
    encode_poly,
    normalize,
    poly_add,
    poly_mod,
    poly_mul,
)

# 53-bit doubles: enough digits that a float conversion loses nothing.
_FLOAT_BITS = 52


def default_depth(base: int, m: int) -> int:
    return max(m, math.ceil(_FLOAT_BITS / math.log2(base)))


@dataclass(frozen=True)
class GeneratingVector:
    """Components q_j: nonzero polynomials of degree < m."""

    polys: tuple[Poly, ...]
    m: int

    def __post_init__(self):
        for j, q in enumerate(self.polys):
            if not q:
                raise ValueError(f"component {j + 1} is zero")
            if degree(q) >= self.m:
                raise ValueError(f"component {j + 1} has degree {degree(q)} >= m={self.m}")

    def __len__(self) -> int:
        return len(self.polys)


@dataclass(frozen=True)
class DigitMatrix:
    """Digits of a point set: shape (n_points, dim, depth), values in [0, base).

    digits[n, j, l] is the coefficient of base**-(l+1) in coordinate j of
    point n. The array is write-locked; treat instances as immutable.
    """

    base: int
    digits: np.ndarray

    def __post_init__(self):
        if self.digits.ndim != 3:
            raise ValueError("digits must have shape (n_points, dim, depth)")
        self.digits.setflags(write=False)

    @property
    def n_points(self) -> int:
        return self.digits.shape[0]

    @property
    def dim(self) -> int:
        return self.digits.shape[1]

    @property
    def depth(self) -> int:
        return self.digits.shape[2]

    def to_floats(self) -> np.ndarray:
        """(n_points, dim) float64 values in [0, 1), by Horner evaluation.

        Elementwise arithmetic only, so results do not depend on how numpy
        happens to schedule reductions.
        """
        vals = np.zeros(self.digits.shape[:2], dtype=np.float64)
        for l in range(self.depth - 1, -1, -1):
            vals = (vals + self.digits[:, :, l]) / self.base
        return vals

    def prefix_ints(self, j: int, k: int) -> np.ndarray:
        """First k digits of coordinate j of every point, packed big-endian."""
        if not 0 <= k <= self.depth:
            raise ValueError(f"prefix length {k} out of range [0, {self.depth}]")
        out = np.zeros(self.n_points, dtype=np.int64)
        for l in range(k):
            out = out * self.base + self.digits[:, j, l]
        return out


def generate_point_set(
    q: GeneratingVector | Sequence[Poly],
    ctx: ModulusContext,
    depth: Optional[int] = None,
) -> DigitMatrix:
    """All b^m points of the rule with generating vector q, digit form.

    The long division producing the digits runs vectorized over the whole
    point index at once, one coordinate at a time.
    """
    if not isinstance(q, GeneratingVector):
        q = GeneratingVector(tuple(normalize(c, ctx.base) for c in q), ctx.m)
    base, m = ctx.base, ctx.m
    if depth is None:
        depth = default_depth(base, m)
    if depth < m:
        raise ValueError(f"depth {depth} < m = {m} would drop point digits")
    n_points = ctx.n_points
    order = max(ctx.unit_order, 1)
    digits = np.empty((n_points, len(q), depth), dtype=np.uint8)
    p_arr = np.asarray(ctx.p, dtype=np.int64)
    inv_lead = pow(ctx.p[-1], -1, base)
    log_n = ctx.log_table  # -1 at index 0, never used below
    for j, qj in enumerate(q.polys):
        # packed residues n(x) q_j(x) mod p for all n, via the flat tables
        log_q = int(log_n[encode_poly(qj, base)])
        resid = np.zeros(n_points, dtype=np.int64)
        if n_points > 1:
            resid[1:] = ctx.pow_table[(log_n[1:] + log_q) % order]
        # unpack into coefficient registers (n_points, m), digit i = coeff of x^i
        reg = np.empty((n_points, m), dtype=np.int64)
        rem = resid.copy()
        for i in range(m):
            reg[:, i] = rem % base
            rem //= base
        # one expansion digit per shift-and-reduce step
        for l in range(depth):
            t = (reg[:, m - 1] * inv_lead) % base
            digits[:, j, l] = t
            new = np.empty_like(reg)
            new[:, 0] = (-t * p_arr[0]) % base
            if m > 1:
                new[:, 1:] = (reg[:, :-1] - t[:, None] * p_arr[1:m]) % base
            reg = new
    return DigitMatrix(base=base, digits=digits)


def truncate_depth(ps: DigitMatrix, depth: int) -> DigitMatrix:
    """Drop digits beyond `depth`."""
    if not 1 <= depth <= ps.depth:
        raise ValueError(f"depth {depth} out of range [1, {ps.depth}]")
    return DigitMatrix(base=ps.base, digits=ps.digits[:, :, :depth].copy())


def pad_depth(ps: DigitMatrix, depth: int) -> DigitMatrix:
    """Extend with zero digits to `depth` (same values, more digit slots).

    Padding a depth-m set represents the truncated coordinate values exactly,
    which is the form the dual/Walsh identity needs for indices >= b^m.
    """
    if depth < ps.depth:
        raise ValueError(f"pad depth {depth} < current depth {ps.depth}")
    out = np.zeros((ps.n_points, ps.dim, depth), dtype=ps.digits.dtype)
    out[:, :, : ps.depth] = ps.digits
    return DigitMatrix(base=ps.base, digits=out)


def tr_m(k: int, m: int, base: int) -> Poly:
    """Polynomial with the m lowest base-b digits of k as coefficients."""
    if k < 0:
        raise ValueError(f"index must be >= 0, got {k}")
    coeffs = []
    for _ in range(m):
        k, c = divmod(k, base)
        coeffs.append(c)
    return normalize(coeffs, base)


def index_digits(k: int, base: int) -> tuple[int, ...]:
    """All base-b digits of k, least significant first (empty for k=0)."""
    if k < 0:
        raise ValueError(f"index must be >= 0, got {k}")
    out = []
    while k:
        k, c = divmod(k, base)
        out.append(c)
    return tuple(out)


def dual_contains(k_vec: Sequence[int], q: Sequence[Poly], ctx: ModulusContext) -> bool:
    """Whether the index vector lies in the dual of the rule.

    Membership: sum_j tr_m(k_j) * q_j = 0 modulo p. Digits of k_j beyond m do
    not matter.
    """
    if len(k_vec) != len(q):
        raise ValueError("index vector and generating vector lengths differ")
    acc: Poly = ()
    for k, qj in zip(k_vec, q):
        prod = poly_mul(tr_m(int(k), ctx.m, ctx.base), qj, ctx.base)
        acc = poly_add(acc, prod, ctx.base)
    return not poly_mod(acc, ctx.p, ctx.base)


def _roots_of_unity(base: int) -> np.ndarray:
    return np.exp(2j * np.pi * np.arange(base) / base)


def walsh(k: int, z_digits: Sequence[int], base: int) -> complex:
    """Walsh function of index k at a point given by its digits.

    The exponent pairs digit i of k with digit i+1 of z. Raises if too few
    digits of z are supplied to cover the digits of k.
    """
    kd = index_digits(k, base)
    if len(z_digits) < len(kd):
        raise ValueError(f"need at least {len(kd)} digits of z, got {len(z_digits)}")
    e = sum(kappa * int(z_digits[i]) for i, kappa in enumerate(kd)) % base
    return complex(_roots_of_unity(base)[e])


def walsh_character_sum(k_vec: Sequence[int], ps: DigitMatrix) -> complex:
    """Mean over the point set of the product of per-coordinate Walsh values.

    For a lattice point set truncated at depth m this equals 1 exactly when
    the index vector is in the dual and 0 otherwise. Deeper digits change the
    value for indices with more than m digits, so dual-membership checks
    should be run on depth-m sets.
    """
    if len(k_vec) != ps.dim:
        raise ValueError("index vector length must equal point dimension")
    base = ps.base
    e = np.zeros(ps.n_points, dtype=np.int64)
    for j, k in enumerate(k_vec):
        kd = index_digits(int(k), base)
        if len(kd) > ps.depth:
            raise ValueError(f"index {k} needs {len(kd)} digits, set has {ps.depth}")
        for i, kappa in enumerate(kd):
            if kappa:
                e += kappa * ps.digits[:, j, i]
    roots = _roots_of_unity(base)[e % base]
    re = math.fsum(roots.real.tolist()) / ps.n_points
    im = math.fsum(roots.imag.tolist()) / ps.n_points
    return complex(re, im)


def format_points_text(values: np.ndarray) -> str:
    """One point per line, coordinates space-separated, 17 significant digits."""
    lines = []
    for row in np.atleast_2d(values):
        lines.append(" ".join(f"{x:.17g}" for x in row))
    return "\n".join(lines) + "\n"


_DUMP_HEADER = np.dtype("<u4")


def digit_dump_bytes(ps: DigitMatrix) -> bytes:
    """Binary digit dump: header (base, n_points, dim, depth) as little-endian
    uint32, then the digits as bytes in row-major (point, coordinate, digit)
    order."""
    header = np.asarray([ps.base, ps.n_points, ps.dim, ps.depth], dtype=_DUMP_HEADER)
    return header.tobytes() + np.ascontiguousarray(ps.digits, dtype=np.uint8).tobytes()


def digit_dump_parse(raw: bytes) -> DigitMatrix:
    """Inverse of digit_dump_bytes."""
    if len(raw) < 16:
        raise ValueError("truncated digit dump")
    base, n_points, dim, depth = (int(v) for v in np.frombuffer(raw[:16], dtype=_DUMP_HEADER))
    body = np.frombuffer(raw[16:], dtype=np.uint8)
    if body.size != n_points * dim * depth:
        raise ValueError("digit dump size does not match its header")
    return DigitMatrix(base=base, digits=body.reshape(n_points, dim, depth).copy())
