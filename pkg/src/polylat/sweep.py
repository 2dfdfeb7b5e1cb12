"""Criterion sweeps over m with slope fits, plus the named experiment presets.

A sweep builds one rule per (config, m) cell with the fast CBC path and
records the criterion value; the log-log slope against m says how fast the
criterion decays in the point count N = b^m.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence, Union

import numpy as np

from .cbc import construct
from .criterion import ProductWeights

M_GUARD_LO = 4
M_GUARD_HI = 20

CSV_SCHEMA_SWEEP = "# polylat-sweep-csv v1"


@dataclass(frozen=True)
class SweepSetting:
    """One curve of a sweep: fixed (alpha, d, s) and a product-weight spec."""

    alpha: int
    d: int
    s: int
    weights: Union[float, str, tuple]

    def label(self) -> str:
        w = self.weights
        wtxt = w if isinstance(w, str) else repr(w)
        # no commas: the label is one CSV field
        return f"alpha={self.alpha} d={self.d} s={self.s} gamma={wtxt}"

    def product_weights(self) -> ProductWeights:
        return ProductWeights.from_spec(self.s, self.weights)


@dataclass(frozen=True)
class SweepConfig:
    """m-range, base, and the list of curves to sweep."""

    m_lo: int
    m_hi: int
    base: int
    settings: tuple[SweepSetting, ...]

    def __post_init__(self):
        if not M_GUARD_LO <= self.m_lo <= self.m_hi <= M_GUARD_HI:
            raise ValueError(
                f"m range must satisfy {M_GUARD_LO} <= m_lo <= m_hi <= "
                f"{M_GUARD_HI}, got [{self.m_lo}, {self.m_hi}]"
            )


@dataclass(frozen=True)
class SweepRow:
    config_id: int
    m: int
    n_points: int
    criterion_value: float


def flat_gamma(alpha: int, d: int) -> float:
    """The per-coordinate weight the single-curve experiments use."""
    return 4.0 ** -max(d - alpha, 0)


def preset(name: str, m_lo: int = 4, m_hi: int = 14, base: int = 2) -> SweepConfig:
    """Named experiment grids.

    fig1: s=1 curves over (alpha, d) pairs, gamma = 4^{-max(d-alpha,0)}.
    fig2: the same pairs at s=2.
    fig3: (alpha, d) = (2, 2), s = 1..5, gamma_j constant 1 vs j^-2.
    """
    pairs = ((1, 1), (1, 2), (1, 3), (2, 2), (2, 3), (3, 3))
    if name == "fig1":
        settings = tuple(SweepSetting(a, d, 1, flat_gamma(a, d)) for a, d in pairs)
    elif name == "fig2":
        settings = tuple(SweepSetting(a, d, 2, flat_gamma(a, d)) for a, d in pairs)
    elif name == "fig3":
        settings = tuple(
            SweepSetting(2, 2, s, w) for s in range(1, 6) for w in (1.0, "j^-2")
        )
    else:
        raise ValueError(f"unknown preset {name!r}; choose fig1, fig2, or fig3")
    return SweepConfig(m_lo=m_lo, m_hi=m_hi, base=base, settings=settings)


def run_sweep(config: SweepConfig, method: str = "fast") -> list[SweepRow]:
    """One constructed rule per (setting, m) cell, in config order."""
    rows = []
    for cid, st in enumerate(config.settings):
        w = st.product_weights()
        for m in range(config.m_lo, config.m_hi + 1):
            rule = construct(config.base, m, st.s, st.d, st.alpha, w, method=method)
            rows.append(
                SweepRow(
                    config_id=cid,
                    m=m,
                    n_points=rule.n_points,
                    criterion_value=rule.criterion_value,
                )
            )
    return rows


def fit_slope(rows: Sequence[SweepRow], base: int, config_id: int = 0) -> float:
    """Least-squares slope of log_b(criterion) against m for one curve."""
    pts = [(r.m, r.criterion_value) for r in rows if r.config_id == config_id]
    if len(pts) < 2:
        raise ValueError(f"need at least 2 rows for config {config_id}, got {len(pts)}")
    if any(v <= 0 for _, v in pts):
        raise ValueError("criterion values must be positive to fit a log slope")
    ms = np.array([m for m, _ in pts], dtype=float)
    logs = np.array([math.log(v, base) for _, v in pts])
    return float(np.polyfit(ms, logs, 1)[0])


def sweep_csv(config: SweepConfig, rows: Sequence[SweepRow]) -> str:
    """CSV with a versioned schema comment, a header, rows, and slope comments."""
    lines = [CSV_SCHEMA_SWEEP, "config_id,label,m,n_points,criterion"]
    for r in rows:
        label = config.settings[r.config_id].label()
        lines.append(
            f"{r.config_id},{label},{r.m},{r.n_points},{r.criterion_value!r}"
        )
    for cid in range(len(config.settings)):
        if any(r.config_id == cid for r in rows):
            slope = fit_slope(rows, config.base, cid)
            lines.append(f"# slope config_id={cid}: {slope:.4f}")
    return "\n".join(lines) + "\n"
