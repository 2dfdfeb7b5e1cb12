"""Randomized integration over scrambled interlaced point sets.

One estimate is the plain average of f over a scrambled point set; repeating
with independent scramble trees gives a mean and an unbiased sample variance.
Everything is reproducible from (rule, seed): replication r uses the scramble
configuration (seed, replication_id=r).
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence, Union

import numpy as np

from .cbc import RuleSpec
from .points import DigitMatrix, generate_point_set
from .scramble import ScrambleConfig, order_d_scramble

DEFAULT_REPLICATIONS = 30

BUILTIN_KINDS = ("constant", "product_quadratic", "product_smooth", "oscillatory")


@dataclass(frozen=True)
class Integrand:
    """A function on [0,1)^s, optionally with its exact integral.

    evaluate takes one point (length-s array); evaluate_many, if given, takes
    an (N, s) array and returns N values in one shot. Both must agree.
    """

    s: int
    evaluate: Callable[[np.ndarray], float]
    exact_integral: Optional[float]
    description: str
    evaluate_many: Optional[Callable[[np.ndarray], np.ndarray]] = field(
        default=None, compare=False
    )

    def values(self, xs: np.ndarray) -> np.ndarray:
        if self.evaluate_many is not None:
            return np.asarray(self.evaluate_many(xs), dtype=np.float64)
        return np.array([float(self.evaluate(x)) for x in xs], dtype=np.float64)


@dataclass(frozen=True)
class RqmcResult:
    """Replicated estimates with their mean and unbiased sample variance."""

    estimates: tuple[float, ...]
    mean: float
    sample_variance: float
    replications: int
    seed: int

    @property
    def stderr(self) -> float:
        return math.sqrt(self.sample_variance / self.replications)

    def to_dict(self) -> dict:
        return {
            "estimates": list(self.estimates),
            "mean": self.mean,
            "sample_variance": self.sample_variance,
            "replications": self.replications,
            "seed": self.seed,
        }


def _check_dims(f: Integrand, rule: RuleSpec) -> None:
    if f.s != rule.s:
        raise ValueError(
            f"integrand takes {f.s}-dimensional points, rule produces {rule.s}"
        )


def _average(f: Integrand, points: DigitMatrix, d: int, cfg: ScrambleConfig) -> float:
    xs = order_d_scramble(points, d, cfg).to_floats()
    vals = f.values(xs)
    # fsum: reduction order fixed regardless of thread count
    return math.fsum(vals.tolist()) / len(vals)


def integrate_once(
    f: Integrand,
    rule: RuleSpec,
    cfg: ScrambleConfig,
    depth: Optional[int] = None,
) -> float:
    """Equal-weight average of f over the scrambled point set of rule."""
    _check_dims(f, rule)
    points = generate_point_set(rule.q, rule.context(), depth)
    return _average(f, points, rule.d, cfg)


def rqmc_estimate(
    f: Integrand,
    rule: RuleSpec,
    replications: int = DEFAULT_REPLICATIONS,
    seed: int = 0,
    depth: Optional[int] = None,
    threads: int = 1,
) -> RqmcResult:
    """Independent scramblings 0..R-1, their mean, and the R-1 divisor variance."""
    if replications < 2:
        raise ValueError(f"need at least 2 replications, got {replications}")
    _check_dims(f, rule)
    points = generate_point_set(rule.q, rule.context(), depth)

    def one(r: int) -> float:
        return _average(f, points, rule.d, ScrambleConfig(seed=seed, replication_id=r))

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            estimates = list(pool.map(one, range(replications)))
    else:
        estimates = [one(r) for r in range(replications)]
    mean = math.fsum(estimates) / replications
    var = math.fsum((e - mean) ** 2 for e in estimates) / (replications - 1)
    return RqmcResult(
        estimates=tuple(estimates),
        mean=mean,
        sample_variance=var,
        replications=replications,
        seed=seed,
    )


def _per_coordinate(s: int, value: Union[float, Sequence[float], str]) -> tuple[float, ...]:
    if isinstance(value, str):
        pat = value.strip()
        if not pat.startswith("j^"):
            raise ValueError(f"unrecognized coefficient pattern {value!r}")
        expo = float(pat[2:])
        return tuple(float(j) ** expo for j in range(1, s + 1))
    if isinstance(value, (int, float)):
        return (float(value),) * s
    out = tuple(float(v) for v in value)
    if len(out) != s:
        raise ValueError(f"expected {s} coefficients, got {len(out)}")
    return out


def builtin_integrand(s: int, kind: str, **params) -> Integrand:
    """Named test integrands with closed-form integrals.

    constant:          f = value                          (exact: value)
    product_quadratic: f = prod_j (x_j^2 + c)             (exact: (1/3 + c)^s)
    product_smooth:    f = prod_j (1 + g_j (x_j^k - 1/(k+1)))   (exact: 1)
    oscillatory:       f = cos(2 pi u0 + sum_j c_j x_j)   (exact: closed form)
    """
    if s < 1:
        raise ValueError(f"dimension must be >= 1, got {s}")
    if kind == "constant":
        value = float(params.pop("value", 1.0))
        _no_extra(params)
        return Integrand(
            s=s,
            evaluate=lambda x: value,
            evaluate_many=lambda xs: np.full(len(xs), value),
            exact_integral=value,
            description=f"constant {value}",
        )
    if kind == "product_quadratic":
        c = float(params.pop("c", 0.0))
        _no_extra(params)
        return Integrand(
            s=s,
            evaluate=lambda x: float(np.prod(np.asarray(x) ** 2 + c)),
            evaluate_many=lambda xs: np.prod(xs**2 + c, axis=1),
            exact_integral=(1.0 / 3.0 + c) ** s,
            description=f"prod (x_j^2 + {c})",
        )
    if kind == "product_smooth":
        gamma = _per_coordinate(s, params.pop("gamma", "j^-2"))
        k = int(params.pop("k", 2))
        _no_extra(params)
        if k < 1:
            raise ValueError(f"exponent k must be >= 1, got {k}")
        g = np.asarray(gamma)
        shift = 1.0 / (k + 1)
        return Integrand(
            s=s,
            evaluate=lambda x: float(np.prod(1.0 + g * (np.asarray(x) ** k - shift))),
            evaluate_many=lambda xs: np.prod(1.0 + g * (xs**k - shift), axis=1),
            exact_integral=1.0,
            description=f"prod (1 + g_j (x_j^{k} - 1/{k + 1})), g = {gamma}",
        )
    if kind == "oscillatory":
        u0 = float(params.pop("u0", 0.0))
        coef = np.asarray(_per_coordinate(s, params.pop("c", 1.0)))
        _no_extra(params)
        # int cos(2 pi u0 + sum c_j x_j) = cos(2 pi u0 + sum c_j / 2) * prod sinc(c_j / 2)
        exact = math.cos(2 * math.pi * u0 + float(np.sum(coef)) / 2.0)
        for cj in coef.tolist():
            exact *= 1.0 if cj == 0.0 else math.sin(cj / 2.0) / (cj / 2.0)
        return Integrand(
            s=s,
            evaluate=lambda x: math.cos(2 * math.pi * u0 + float(np.dot(coef, x))),
            evaluate_many=lambda xs: np.cos(2 * math.pi * u0 + xs @ coef),
            exact_integral=exact,
            description=f"cos(2 pi {u0} + c . x), c = {coef.tolist()}",
        )
    raise ValueError(f"unknown integrand kind {kind!r}; choose from {BUILTIN_KINDS}")


def _no_extra(params: dict) -> None:
    if params:
        raise ValueError(f"unrecognized integrand parameters: {sorted(params)}")
