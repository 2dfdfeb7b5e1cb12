"""Nested uniform digit scrambling with reproducible permutation trees.

Each coordinate gets an infinite random permutation tree: the permutation
applied to digit k of a point depends on the digits 1..k-1 of that same
coordinate (of the *input* point), so points sharing a digit prefix share the
permutation and the net structure of the set survives scrambling.

Trees are never materialized. A node's permutation is a pure function of
(seed, replication, coordinate, digit prefix), computed with a counter-based
SplitMix64 finalizer chain: the root key hashes seed/replication/coordinate,
and consuming one input digit advances the key by one more mix round. Equal
prefixes therefore reach equal keys without any shared state, which makes
results independent of evaluation order and thread count. Replication r is
the same construction with r mixed into the root key (independent streams).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import permutations

import numpy as np

from .interlace import interlace_set
from .points import DigitMatrix

_U64 = np.uint64
_GOLDEN = _U64(0x9E3779B97F4A7C15)


def _mix(x: np.ndarray | np.uint64) -> np.ndarray | np.uint64:
    """SplitMix64 finalizer; accepts scalars or uint64 arrays."""
    x = _U64(x) if np.isscalar(x) or isinstance(x, int) else x
    with np.errstate(over="ignore"):
        x = (x ^ (x >> _U64(30))) * _U64(0xBF58476D1CE4E5B9)
        x = (x ^ (x >> _U64(27))) * _U64(0x94D049BB133111EB)
        return x ^ (x >> _U64(31))


def _perm_table(base: int) -> np.ndarray:
    """All base! permutations of range(base), lexicographic, shape (base!, base)."""
    return np.asarray(list(permutations(range(base))), dtype=np.uint8)


@dataclass(frozen=True)
class ScrambleConfig:
    """Seed material and options for one scrambling operation.

    identity=True replaces every node permutation with the identity (a test
    hook: scrambling must then return the input digits unchanged).
    """

    seed: int = 0
    replication_id: int = 0
    identity: bool = False

    def __post_init__(self):
        if not 0 <= self.seed < 1 << 64:
            raise ValueError("seed must fit in 64 bits")
        if self.replication_id < 0:
            raise ValueError("replication_id must be >= 0")

    def root_key(self, coordinate: int) -> np.uint64:
        k = _mix(_U64(self.seed) + _GOLDEN)
        k = _mix(k ^ _U64(self.replication_id))
        return _mix(k ^ _U64(coordinate))


class ScrambleTree:
    """Permutation tree of one coordinate, evaluated node by node.

    Scalar companion of the vectorized scramble_set: walk(prefix) returns the
    permutation applied to the digit following the given input-digit prefix.
    """

    def __init__(self, base: int, config: ScrambleConfig, coordinate: int):
        self.base = base
        self.config = config
        self.coordinate = coordinate
        self._perms = _perm_table(base)
        self._nperm = _U64(len(self._perms))

    def permutation(self, prefix: tuple[int, ...]) -> np.ndarray:
        if self.config.identity:
            return np.arange(self.base, dtype=np.uint8)
        key = self.config.root_key(self.coordinate)
        for digit in prefix:
            key = _mix(key ^ _U64(int(digit) + 1))
        return self._perms[int(key % self._nperm)]

    def apply(self, digits: tuple[int, ...]) -> tuple[int, ...]:
        out = []
        for k in range(len(digits)):
            perm = self.permutation(tuple(digits[:k]))
            out.append(int(perm[digits[k]]))
        return tuple(out)


def scramble_set(ps: DigitMatrix, config: ScrambleConfig) -> DigitMatrix:
    """Scramble every coordinate of a point set with one tree per coordinate.

    All points of the set go through the same trees, which is what preserves
    prefix counts; fresh replications need fresh configs, not fresh calls.
    """
    base = ps.base
    if config.identity:
        return DigitMatrix(base=base, digits=ps.digits.copy())
    perms = _perm_table(base)
    nperm = _U64(len(perms))
    out = np.empty_like(ps.digits)
    for j in range(ps.dim):
        key = np.full(ps.n_points, config.root_key(j), dtype=_U64)
        for l in range(ps.depth):
            digit = ps.digits[:, j, l]
            pick = (key % nperm).astype(np.int64)
            out[:, j, l] = perms[pick, digit]
            # advance keys by the consumed *input* digit
            key = _mix(key ^ (digit.astype(_U64) + _U64(1)))
    return DigitMatrix(base=base, digits=out)


def order_d_scramble(ps: DigitMatrix, d: int, config: ScrambleConfig) -> DigitMatrix:
    """Scramble the d*s-dimensional set, then interlace blocks of d.

    This is the randomization the estimator uses: scrambling happens in the
    underlying lattice dimensions, interlacing compresses to s coordinates
    with d * depth digits each.
    """
    return interlace_set(scramble_set(ps, config), d)
