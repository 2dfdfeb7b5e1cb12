"""Digit interlacing of points and indices, plus the digit-decay weights.

Interlacing factor d packs blocks of d coordinates into one: digit a
(1-based) of block component r lands at output digit position r + (a-1)d.
The index-side interlacing does the same with the base-b digits of integer
indices, and is its inverse image under the Walsh pairing: the Walsh value of
an interlaced index at an interlaced point equals the product of the
component Walsh values.
"""

from __future__ import annotations

import math
from typing import Sequence

import numpy as np

from .points import DigitMatrix, index_digits


def interlace_set(ps: DigitMatrix, d: int) -> DigitMatrix:
    """Interlace consecutive blocks of d coordinates of a point set.

    The input dimension must be a multiple of d; the output has dim/d
    coordinates with d * depth digits each.
    """
    if d < 1:
        raise ValueError(f"interlacing factor must be >= 1, got {d}")
    if ps.dim % d:
        raise ValueError(f"dimension {ps.dim} is not a multiple of d={d}")
    s = ps.dim // d
    # (n, s, d, depth) -> (n, s, depth, d): output digit index a*d + r
    blocks = ps.digits.reshape(ps.n_points, s, d, ps.depth)
    out = np.ascontiguousarray(blocks.transpose(0, 1, 3, 2)).reshape(
        ps.n_points, s, d * ps.depth
    )
    return DigitMatrix(base=ps.base, digits=out)


def deinterlace_set(ps: DigitMatrix, d: int) -> DigitMatrix:
    """Inverse of interlace_set (depth must be a multiple of d)."""
    if d < 1:
        raise ValueError(f"interlacing factor must be >= 1, got {d}")
    if ps.depth % d:
        raise ValueError(f"depth {ps.depth} is not a multiple of d={d}")
    depth = ps.depth // d
    blocks = ps.digits.reshape(ps.n_points, ps.dim, depth, d)
    out = np.ascontiguousarray(blocks.transpose(0, 1, 3, 2)).reshape(
        ps.n_points, ps.dim * d, depth
    )
    return DigitMatrix(base=ps.base, digits=out)


def interlace_point(digit_rows: np.ndarray) -> np.ndarray:
    """Interlace d digit rows (shape (d, depth)) into one row of d*depth digits."""
    rows = np.asarray(digit_rows)
    if rows.ndim != 2:
        raise ValueError("expected a (d, depth) digit array")
    return np.ascontiguousarray(rows.T).reshape(-1)


def interlace_index(ks: Sequence[int], d: int, base: int) -> int:
    """Interlace the base-b digits of d integer indices into one index."""
    if len(ks) != d:
        raise ValueError(f"expected {d} indices, got {len(ks)}")
    out = 0
    for r, k in enumerate(ks):
        for a, digit in enumerate(index_digits(int(k), base)):
            out += digit * base ** (r + a * d)
    return out


def deinterlace_index(k: int, d: int, base: int) -> tuple[int, ...]:
    """Inverse of interlace_index."""
    if k < 0:
        raise ValueError(f"index must be >= 0, got {k}")
    out = [0] * d
    a = 0
    while k:
        for r in range(d):
            k, digit = divmod(k, base)
            out[r] += digit * base**a
        a += 1
    return tuple(out)


def mu(k: int, base: int) -> int:
    """Digit length of k minus one (the floor of log_base k). Requires k >= 1."""
    if k < 1:
        raise ValueError(f"mu is defined for k >= 1, got {k}")
    return len(index_digits(k, base)) - 1


def r_weight(
    k_vec: Sequence[int],
    alpha: int,
    d: int,
    base: int,
    alternative: bool = False,
) -> float:
    """Digit-decay weight of an index vector: per nonzero component,
    base**-((2 min(alpha,d) + 1) * mu(k)).

    `alternative` multiplies each nonzero-component factor by 1/(base-1),
    a normalization variant kept behind this flag (default off).
    """
    exp2 = 2 * min(alpha, d) + 1
    out = 1.0
    for k in k_vec:
        k = int(k)
        if k < 0:
            raise ValueError(f"indices must be >= 0, got {k}")
        if k:
            out *= 1.0 / base ** (exp2 * mu(k, base))
            if alternative:
                out /= base - 1
    return out
