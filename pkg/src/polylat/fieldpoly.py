"""Polynomial arithmetic over small prime fields.

Polynomials are tuples of ints in [0, base), constant term first, with no
trailing zeros; the zero polynomial is the empty tuple. Residues modulo a
degree-m polynomial are also packed into plain integers in [0, base**m) by
base-b positional packing of the coefficients (coefficient of x^i is digit i),
which keeps the power/log tables flat arrays and identifies the point index n
with the polynomial n(x) built from its base-b digits.

The canonical total order on polynomials compares coefficient vectors read
from the constant term upward (c0 first). It is used everywhere a smallest
element is needed: modulus search, generator search, and construction
tie-breaks, so results do not depend on the choice of primitive element.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterator, Optional, Sequence

import numpy as np

Poly = tuple[int, ...]

ZERO: Poly = ()
ONE: Poly = (1,)

# Desk-scale cap on the residue count b**m; the flat pow/log tables and the
# point sets are all sized by it.
MAX_RESIDUES = 1 << 22


def is_prime(n: int) -> bool:
    """Primality by trial division (inputs are small)."""
    if n < 2:
        return False
    i = 2
    while i * i <= n:
        if n % i == 0:
            return False
        i += 1
    return True


def validate_base(base: int) -> int:
    """Check that base is a prime in [2, 2**16] and return it."""
    if not isinstance(base, int) or isinstance(base, bool):
        raise ValueError(f"base must be an int, got {base!r}")
    if base > 1 << 16 or not is_prime(base):
        raise ValueError(f"base must be a prime <= 2**16, got {base}")
    return base


def prime_factors(n: int) -> list[int]:
    """Distinct prime factors of n by trial division (n fits in 64 bits)."""
    out = []
    i = 2
    while i * i <= n:
        if n % i == 0:
            out.append(i)
            while n % i == 0:
                n //= i
        i += 1
    if n > 1:
        out.append(n)
    return out


def normalize(coeffs: Sequence[int], base: int) -> Poly:
    """Reduce coefficients mod base and strip trailing zeros."""
    c = [int(v) % base for v in coeffs]
    while c and c[-1] == 0:
        c.pop()
    return tuple(c)


def degree(a: Poly) -> int:
    """Degree of a; the zero polynomial has degree -1."""
    return len(a) - 1


def poly_add(a: Poly, c: Poly, base: int) -> Poly:
    if len(a) < len(c):
        a, c = c, a
    out = list(a)
    for i, v in enumerate(c):
        out[i] = (out[i] + v) % base
    return normalize(out, base)


def poly_sub(a: Poly, c: Poly, base: int) -> Poly:
    out = list(a) + [0] * max(0, len(c) - len(a))
    for i, v in enumerate(c):
        out[i] = (out[i] - v) % base
    return normalize(out, base)


def poly_mul(a: Poly, c: Poly, base: int) -> Poly:
    if not a or not c:
        return ZERO
    out = [0] * (len(a) + len(c) - 1)
    for i, u in enumerate(a):
        if u:
            for j, v in enumerate(c):
                out[i + j] = (out[i + j] + u * v) % base
    return normalize(out, base)


def poly_divmod(a: Poly, d: Poly, base: int) -> tuple[Poly, Poly]:
    """Quotient and remainder of a by d (d nonzero)."""
    if not d:
        raise ZeroDivisionError("polynomial division by zero")
    r = list(a)
    dd = degree(d)
    inv_lead = pow(d[-1], -1, base)
    q = [0] * max(0, len(a) - dd)
    for i in range(len(a) - 1, dd - 1, -1):
        if r[i]:
            t = (r[i] * inv_lead) % base
            q[i - dd] = t
            for j, v in enumerate(d):
                r[i - dd + j] = (r[i - dd + j] - t * v) % base
    return normalize(q, base), normalize(r, base)


def poly_mod(a: Poly, d: Poly, base: int) -> Poly:
    return poly_divmod(a, d, base)[1]


def poly_mulmod(a: Poly, c: Poly, p: Poly, base: int) -> Poly:
    return poly_mod(poly_mul(a, c, base), p, base)


def poly_powmod(a: Poly, e: int, p: Poly, base: int) -> Poly:
    r: Poly = ONE
    a = poly_mod(a, p, base)
    while e:
        if e & 1:
            r = poly_mulmod(r, a, p, base)
        a = poly_mulmod(a, a, p, base)
        e >>= 1
    return r


def encode_poly(a: Poly, base: int) -> int:
    """Pack coefficients into an integer: coefficient of x^i is base-b digit i."""
    r = 0
    for c in reversed(a):
        r = r * base + c
    return r


def decode_poly(r: int, base: int) -> Poly:
    """Inverse of encode_poly."""
    if r < 0:
        raise ValueError("encoded polynomial must be nonnegative")
    out = []
    while r:
        r, c = divmod(r, base)
        out.append(c)
    return tuple(out)


def poly_sort_key(a: Poly, width: int) -> tuple[int, ...]:
    """Canonical comparison key: coefficients (c0, c1, ...) padded to width."""
    return tuple(a) + (0,) * (width - len(a))


def monic_polys(base: int, deg: int) -> Iterator[Poly]:
    """Monic degree-deg polynomials in canonical ascending order."""
    # itertools.product would also do; an explicit odometer keeps c0 the
    # most significant position of the ordering.
    lower = [0] * deg
    while True:
        yield normalize(lower + [1], base)
        i = deg - 1
        while i >= 0 and lower[i] == base - 1:
            lower[i] = 0
            i -= 1
        if i < 0:
            return
        lower[i] += 1


def is_irreducible(f: Poly, base: int) -> bool:
    """Irreducibility by trial division by monic polynomials of degree <= deg(f)/2."""
    deg = degree(f)
    if deg <= 0:
        raise ValueError("irreducibility needs degree >= 1")
    if deg == 1:
        return True
    for d in range(1, deg // 2 + 1):
        for g in monic_polys(base, d):
            if not poly_mod(f, g, base):
                return False
    return True


def find_irreducible(base: int, m: int) -> Poly:
    """Canonically smallest monic irreducible of degree m."""
    if m < 1:
        raise ValueError(f"degree must be >= 1, got {m}")
    for f in monic_polys(base, m):
        if is_irreducible(f, base):
            return f
    raise RuntimeError("unreachable: irreducibles exist for every degree")


def multiplicative_order_is(g: Poly, order: int, p: Poly, base: int) -> bool:
    """True when g has exact multiplicative order `order` modulo p."""
    if poly_powmod(g, order, p, base) != ONE:
        return False
    return all(poly_powmod(g, order // f, p, base) != ONE for f in prime_factors(order))


def find_generator(p: Poly, base: int) -> Poly:
    """Canonically smallest residue generating the unit group modulo p."""
    m = degree(p)
    order = base**m - 1
    if order == 1:
        return ONE
    # Walk residues in canonical order: odometer over (c0, ..., c_{m-1}),
    # c0 most significant. Packed-integer order would differ.
    coeffs = [0] * m
    while True:
        i = m - 1
        while i >= 0 and coeffs[i] == base - 1:
            coeffs[i] = 0
            i -= 1
        if i < 0:
            break
        coeffs[i] += 1
        g = normalize(coeffs, base)
        if multiplicative_order_is(g, order, p, base):
            return g
    raise ValueError(f"no generator found; modulus {p} is not irreducible over F_{base}")


@dataclass(frozen=True)
class ModulusContext:
    """Irreducible modulus p of degree m over F_base plus derived tables.

    pow_table[t] is the packed residue of g**t for t in [0, base**m - 1);
    log_table is its inverse (entry 0 is -1: zero has no logarithm).
    Immutable after construction; safe to share across threads.
    """

    base: int
    m: int
    p: Poly
    g: Poly
    pow_table: np.ndarray
    log_table: np.ndarray
    _caches: dict = field(default_factory=dict, repr=False, compare=False)

    @property
    def n_points(self) -> int:
        return self.base**self.m

    @property
    def unit_order(self) -> int:
        return self.base**self.m - 1

    @classmethod
    def create(
        cls,
        base: int,
        m: Optional[int] = None,
        p: Optional[Poly] = None,
        generator: Optional[Poly] = None,
    ) -> "ModulusContext":
        """Build a context from (base, m) or an explicit modulus p.

        An explicit generator may be supplied (it is validated); by default the
        canonically smallest one is used.
        """
        validate_base(base)
        if p is None:
            if m is None:
                raise ValueError("either m or p is required")
            p = find_irreducible(base, m)
        else:
            p = normalize(p, base)
            if m is not None and degree(p) != m:
                raise ValueError(f"modulus degree {degree(p)} does not match m={m}")
            if not is_irreducible(p, base):
                raise ValueError(f"modulus {p} is not irreducible over F_{base}")
            if p[-1] != 1:
                raise ValueError("modulus must be monic")
        m = degree(p)
        if base**m > MAX_RESIDUES:
            raise ValueError(f"base**m = {base**m} exceeds the desk-scale cap {MAX_RESIDUES}")
        order = base**m - 1
        if generator is None:
            g = find_generator(p, base)
        else:
            g = poly_mod(normalize(generator, base), p, base)
            if order > 1 and not multiplicative_order_is(g, order, p, base):
                raise ValueError(f"{generator} does not generate the unit group")
            if order == 1:
                g = ONE
        pow_table = np.empty(max(order, 1), dtype=np.int64)
        log_table = np.full(base**m, -1, dtype=np.int64)
        r: Poly = ONE
        for t in range(max(order, 1)):
            e = encode_poly(r, base)
            pow_table[t] = e
            log_table[e] = t
            r = poly_mulmod(r, g, p, base)
        if r != ONE:
            raise AssertionError("generator order check failed")
        pow_table.setflags(write=False)
        log_table.setflags(write=False)
        return cls(base=base, m=m, p=p, g=g, pow_table=pow_table, log_table=log_table)

    def mulmod_packed(self, r1: int, r2: int) -> int:
        """Product of packed residues via the log/pow tables."""
        if r1 == 0 or r2 == 0:
            return 0
        t = (int(self.log_table[r1]) + int(self.log_table[r2])) % max(self.unit_order, 1)
        return int(self.pow_table[t])

    def digit_lengths(self) -> np.ndarray:
        """Array over packed residues r of the base-b digit count of r (0 for r=0).

        The expansion of r(x)/p(x) starts at position m - deg(r), so this is
        what the first-nonzero-digit index of every coordinate value reduces to.
        """
        cached = self._caches.get("digit_lengths")
        if cached is None:
            n = self.n_points
            powers = [1]
            while powers[-1] < n:
                powers.append(powers[-1] * self.base)
            # r in [b^(L-1), b^L) has L digits; r = 0 has none
            lengths = np.searchsorted(np.asarray(powers, dtype=np.int64), np.arange(n), side="right")
            lengths[0] = 0
            lengths.setflags(write=False)
            cached = lengths
            self._caches["digit_lengths"] = cached
        return cached


def laurent_digits(numer: Poly, ctx: ModulusContext, depth: Optional[int] = None) -> tuple[int, ...]:
    """First `depth` digits (base b) of the expansion of numer/p in powers of 1/x.

    Terms with nonnegative powers of x are discarded (numer is reduced mod p
    first), matching the map that sends a formal Laurent series to [0, 1).
    Depth defaults to m; larger depths continue the long division.
    """
    base, m, p = ctx.base, ctx.m, ctx.p
    if depth is None:
        depth = m
    if depth < 1:
        raise ValueError(f"depth must be >= 1, got {depth}")
    r = list(poly_mod(numer, p, base)) + [0] * m
    r = r[:m]
    inv_lead = pow(p[-1], -1, base)
    digits = []
    for _ in range(depth):
        # multiply the remainder by x, reduce the x^m coefficient away
        t = (r[m - 1] * inv_lead) % base if m >= 1 else 0
        digits.append(t)
        new = [0] * m
        new[0] = (-t * p[0]) % base
        for i in range(1, m):
            new[i] = (r[i - 1] - t * p[i]) % base
        r = new
    return tuple(digits)


def vm_value(numer: Poly, ctx: ModulusContext, depth: Optional[int] = None) -> float:
    """Value in [0, 1) of the truncated expansion of numer/p."""
    digits = laurent_digits(numer, ctx, depth)
    v = 0.0
    for t in reversed(digits):
        v = (v + t) / ctx.base
    return v
