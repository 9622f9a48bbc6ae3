"""White-noise robustness thresholds.

For ``a |D_m^N><D_m^N| + (1 - a) I / 2**N`` the criterion value is affine in
``a``, so its root has a closed form in integers.  Arbitrary noise families go
through bisection on the evaluated criterion instead.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional, Sequence

import numpy as np

from .criteria import CriterionContext, CriterionValue, detect, nk_theorem1, nk_theorem2
from .qstate import NoiseFamily, StateError

GRID_POINTS = 32


class ThresholdError(StateError):
    pass


class NonMonotoneError(ThresholdError):
    def __init__(self, lo: tuple[float, float], hi: tuple[float, float]):
        super().__init__(
            f"criterion value decreases from {lo[1]!r} at a={lo[0]!r} to {hi[1]!r} at a={hi[0]!r}"
        )
        self.pair = (lo, hi)


@dataclass(frozen=True)
class ThresholdResult:
    a_star: Optional[float]  # None: no detection for any a in [0, 1]
    method: str
    exact: Optional[Fraction] = None
    residual: Optional[float] = None
    nk: Optional[int] = None

    @property
    def in_range(self) -> bool:
        return self.a_star is not None


def dicke_threshold_closed_form(n: int, m: int, k: int) -> Fraction:
    """Exact root of the criterion value on the Dicke white-noise line.

    With ``C = C(n, m)`` and ``M = m C (n - m)`` ordered off-diagonal terms the
    root is ``(M + nk C) / (M + nk C - 2**n nk + 2**n m (n - m))``.
    """
    nk = nk_theorem2(n, k, m)
    c = math.comb(n, m)
    num = m * c * (n - m) + nk * c
    den = num - (1 << n) * nk + (1 << n) * m * (n - m)
    if den <= 0:
        raise ThresholdError(
            f"criterion cannot detect in this regime (n={n}, m={m}, k={k}: denominator {den})"
        )
    return Fraction(num, den)


def dicke2_threshold_printed(n: int, k: int) -> Fraction:
    """Two-excitation threshold written as ``(2C(N-2) + nk C) / (... + 2**(N+1) (N-2))``."""
    nk = nk_theorem1(n, k)
    c = math.comb(n, 2)
    num = 2 * c * (n - 2) + nk * c
    return Fraction(num, num - (1 << n) * nk + (1 << (n + 1)) * (n - 2))


def closed_form_threshold(n: int, m: int, k: int) -> ThresholdResult:
    exact = dicke_threshold_closed_form(n, m, k)
    nk = nk_theorem2(n, k, m)
    a_star = float(exact) if exact < 1 else None
    return ThresholdResult(a_star, "closed_form", exact=exact, nk=nk)


def _value(family: NoiseFamily, ctx: CriterionContext, a: float) -> CriterionValue:
    return detect(family.realize(a), ctx)


def bisection_threshold(family: NoiseFamily, ctx: CriterionContext, tol: float = 1e-10) -> ThresholdResult:
    if tol <= 0:
        raise ThresholdError("tol must be positive")
    grid = np.linspace(0.0, 1.0, GRID_POINTS)
    vals = [_value(family, ctx, float(a)) for a in grid]
    for (a0, v0), (a1, v1) in zip(zip(grid, vals), zip(grid[1:], vals[1:])):
        slack = 1e-12 * max(1.0, abs(v0.a_part) + abs(v0.b_part))
        if v1.value < v0.value - slack:
            raise NonMonotoneError((float(a0), v0.value), (float(a1), v1.value))
    if vals[0].value > 0 and vals[0].detected:
        raise ThresholdError(f"criterion already positive at a=0 ({vals[0].value!r})")
    if not vals[-1].detected:
        return ThresholdResult(None, "bisection", nk=ctx.nk)
    hi_idx = max(1, next(i for i, v in enumerate(vals) if v.value > 0))
    lo, hi = float(grid[hi_idx - 1]), float(grid[hi_idx])
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if _value(family, ctx, mid).value > 0:
            hi = mid
        else:
            lo = mid
    a_star = 0.5 * (lo + hi)
    return ThresholdResult(a_star, "bisection", residual=abs(_value(family, ctx, a_star).value), nk=ctx.nk)


@dataclass(frozen=True)
class ScanPoint:
    a: float
    value: float
    nk: int
    verdict: str


def scan(family: NoiseFamily, ctx: CriterionContext, grid: Sequence[float]) -> list[ScanPoint]:
    out = []
    for a in grid:
        v = _value(family, ctx, float(a))
        out.append(ScanPoint(float(a), v.value, v.nk, v.verdict))
    return out


def scan_csv(points: Sequence[ScanPoint]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["a", "value", "nk", "verdict"])
    for p in points:
        writer.writerow([format(p.a, ".17g"), format(p.value, ".17g"), p.nk, p.verdict])
    return buf.getvalue()


def affine_fit(points: Sequence[ScanPoint]) -> tuple[float, float, float]:
    """Least-squares line through the scan: ``(slope, intercept, max residual)``."""
    a = np.array([p.a for p in points])
    v = np.array([p.value for p in points])
    design = np.column_stack([a, np.ones_like(a)])
    (slope, intercept), *_ = np.linalg.lstsq(design, v, rcond=None)
    residual = float(np.max(np.abs(design @ np.array([slope, intercept]) - v)))
    return float(slope), float(intercept), residual
