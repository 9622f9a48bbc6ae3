"""k-separability criteria built from basis-state off-diagonals.

Every criterion has the same shape::

    value = sum_terms (|rho[x, y]| - sqrt(rho[u, u] * rho[v, v])) - nk * sum_diag rho[z, z]

where ``(u, v)`` is the image of ``(x, y)`` under the two-copy swap of one
subsystem.  That image is a pair of basis states, so the two-copy expectation
``<x|<y| P rho (x) rho P |x>|y>`` collapses to ``rho[u, u] * rho[v, v]`` for any
``rho``.  A positive value certifies that ``rho`` is not k-separable.

Criteria are compiled once into a :class:`TermPlan` (index lists in a fixed
lexicographic order) and then evaluated either on a sparse
:class:`~dickesep.qstate.DensityMatrix` or, vectorised, on batches of dense
state vectors / density matrices.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from functools import lru_cache
from itertools import combinations
from typing import Optional, Sequence, Union

import numpy as np

from .qstate import (
    BasisState,
    DensityMatrix,
    MalformedStateError,
    StateError,
    parse_bitstring,
    pattern_bits,
    position_bit,
    weight_masks,
)

VERDICT_EPS = 1e-12

K_NONSEPARABLE = "k_nonseparable"
INCONCLUSIVE = "inconclusive"


def _check_k(n: int, k: int) -> None:
    if not 2 <= k <= n:
        raise StateError(f"need 2 <= k <= n, got n={n}, k={k}")


# --------------------------------------------------------------------------
# combinatorial constants


def nk_theorem1(n: int, k: int) -> int:
    _check_k(n, k)
    return max(2 * (n - k - 1), n - k)


def nk_theorem2(n: int, k: int, m: int) -> int:
    """``max_{1 <= t <= m} t * (n - k + 1 - t)``, floored at 0."""
    _check_k(n, k)
    if not 1 <= m <= n - 1:
        raise StateError(f"need 1 <= m <= n-1, got n={n}, m={m}")
    return max(0, max(t * (n - k + 1 - t) for t in range(1, m + 1)))


@dataclass(frozen=True)
class Theorem3Basis:
    """Product basis states ``V`` and, per member, the members at Hamming distance 2."""

    n_qubits: int
    states: tuple[int, ...]
    neighbors: tuple[tuple[int, ...], ...]

    def state(self, alpha: int) -> BasisState:
        return BasisState(self.n_qubits, self.states[alpha])


def build_k_alpha(v: Sequence[Union[BasisState, int]], n_qubits: Optional[int] = None) -> Theorem3Basis:
    """Build the neighbour sets ``K_alpha``; ``v`` may hold BasisStates or raw bitmasks."""
    if not v:
        raise StateError("basis set is empty")
    widths = {b.n_qubits for b in v if isinstance(b, BasisState)}
    if n_qubits is not None:
        widths.add(n_qubits)
    if len(widths) != 1:
        raise StateError(f"basis states disagree on the qubit count: {sorted(widths)}")
    n = widths.pop()
    states = tuple(b.bits if isinstance(b, BasisState) else int(b) for b in v)
    for s in states:
        BasisState(n, s)
    if len(set(states)) != len(states):
        raise StateError("basis set contains duplicate states")
    neighbors = tuple(
        tuple(beta for beta, sb in enumerate(states) if (sa ^ sb).bit_count() == 2)
        for sa in states
    )
    return Theorem3Basis(n, states, neighbors)


@dataclass(frozen=True)
class NkWitness:
    alpha: Optional[int]
    subset: tuple[int, ...]
    count: int


def nk_theorem3(basis: Theorem3Basis, k: int) -> tuple[int, NkWitness]:
    """Exhaustive max over ``alpha`` and ``(n-k+1)``-subsets ``S`` of the number of
    ``beta`` in ``K_alpha`` whose two differing positions both lie in ``S``."""
    n = basis.n_qubits
    _check_k(n, k)
    if not any(basis.neighbors):
        return 0, NkWitness(None, (), 0)
    size = n - k + 1
    subsets = [(s, pattern_bits(n, s)) for s in combinations(range(1, n + 1), size)]
    best = NkWitness(None, (), -1)
    for alpha, sa in enumerate(basis.states):
        diffs = [sa ^ basis.states[beta] for beta in basis.neighbors[alpha]]
        if not diffs:
            continue
        for positions, mask in subsets:
            count = sum(1 for d in diffs if d & mask == d)
            if count > best.count:
                best = NkWitness(alpha, positions, count)
    return best.count, best


# --------------------------------------------------------------------------
# term plans


@dataclass(frozen=True)
class SwapTermSpec:
    """Swap image ``(reduced, extended)`` of an off-diagonal pair.

    For excitation patterns, ``reduced`` drops the moved excitation and
    ``extended`` carries both; for a general pair they are simply the two
    basis states produced by the swap.
    """

    reduced: int
    extended: int


def swap_images(left: int, right: int, position_mask: int) -> SwapTermSpec:
    """Exchange the bit selected by ``position_mask`` between ``left`` and ``right``."""
    flip = (left ^ right) & position_mask
    return SwapTermSpec(left ^ flip, right ^ flip)


def swap_term(rho: DensityMatrix, spec: SwapTermSpec) -> float:
    """``sqrt(<l|<r| P rho (x) rho P |l>|r>)`` via the diagonal product."""
    prod = rho.diagonal(spec.reduced) * rho.diagonal(spec.extended)
    return math.sqrt(prod) if prod > 0.0 else 0.0


@dataclass(frozen=True)
class CriterionValue:
    a_part: float
    b_part: float
    value: float
    nk: int
    verdict: str

    @classmethod
    def from_parts(cls, a_part: float, b_part: float, nk: int) -> "CriterionValue":
        value = a_part - b_part
        eps = VERDICT_EPS * max(1.0, abs(a_part) + abs(b_part))
        return cls(a_part, b_part, value, nk, K_NONSEPARABLE if value > eps else INCONCLUSIVE)

    @property
    def detected(self) -> bool:
        return self.verdict == K_NONSEPARABLE


@dataclass(frozen=True)
class TermPlan:
    n_qubits: int
    nk: int
    rows: tuple[int, ...]
    cols: tuple[int, ...]
    swaps: tuple[SwapTermSpec, ...]
    diag: tuple[int, ...]
    _arrays: dict = field(default_factory=dict, compare=False, repr=False)

    def __len__(self) -> int:
        return len(self.rows)

    def evaluate(self, rho: DensityMatrix) -> CriterionValue:
        if rho.n_qubits != self.n_qubits:
            raise StateError(f"state has {rho.n_qubits} qubits, criterion expects {self.n_qubits}")
        el = rho.element
        terms = [abs(el(r, c)) - swap_term(rho, s) for r, c, s in zip(self.rows, self.cols, self.swaps)]
        a_part = math.fsum(terms)
        b_part = self.nk * math.fsum(rho.diagonal(z) for z in self.diag)
        return CriterionValue.from_parts(a_part, b_part, self.nk)

    def arrays(self) -> dict[str, np.ndarray]:
        if not self._arrays:
            self._arrays.update(
                rows=np.array(self.rows, dtype=np.int64),
                cols=np.array(self.cols, dtype=np.int64),
                red=np.array([s.reduced for s in self.swaps], dtype=np.int64),
                ext=np.array([s.extended for s in self.swaps], dtype=np.int64),
                diag=np.array(self.diag, dtype=np.int64),
            )
        return self._arrays

    def evaluate_vectors(self, psi: np.ndarray) -> np.ndarray:
        """Criterion values for a batch of pure states, ``psi`` shaped (batch, 2**n)."""
        ar = self.arrays()
        mag = np.abs(np.atleast_2d(psi))
        a = (mag[:, ar["rows"]] * mag[:, ar["cols"]] - mag[:, ar["red"]] * mag[:, ar["ext"]]).sum(axis=1)
        b = self.nk * (mag[:, ar["diag"]] ** 2).sum(axis=1)
        return a - b

    def evaluate_dense(self, rho: np.ndarray) -> np.ndarray:
        """Criterion values for a batch of dense density matrices shaped (batch, d, d)."""
        ar = self.arrays()
        rho = np.asarray(rho)
        if rho.ndim == 2:
            rho = rho[None]
        diag = np.clip(np.diagonal(rho, axis1=1, axis2=2).real, 0.0, None)
        off = np.abs(rho[:, ar["rows"], ar["cols"]])
        sq = np.sqrt(diag[:, ar["red"]] * diag[:, ar["ext"]])
        return (off - sq).sum(axis=1) - self.nk * diag[:, ar["diag"]].sum(axis=1)


def _bit(n: int, position: int) -> int:
    return position_bit(n, position)


@lru_cache(maxsize=256)
def plan_theorem1(n: int, k: int) -> TermPlan:
    if n < 3:
        raise StateError(f"the two-excitation criterion needs n >= 3, got {n}")
    nk = nk_theorem1(n, k)
    rows, cols, swaps = [], [], []
    positions = range(1, n + 1)
    for i in positions:
        for j in positions:
            for jp in positions:
                if len({i, j, jp}) < 3:
                    continue
                bi, bj, bjp = _bit(n, i), _bit(n, j), _bit(n, jp)
                rows.append(bi | bj)
                cols.append(bi | bjp)
                swaps.append(SwapTermSpec(bi, bi | bj | bjp))
    return TermPlan(n, nk, tuple(rows), tuple(cols), tuple(swaps), tuple(weight_masks(n, 2)))


@lru_cache(maxsize=256)
def plan_theorem2(n: int, k: int, m: int) -> TermPlan:
    nk = nk_theorem2(n, k, m)
    rows, cols, swaps, diag = [], [], [], []
    for pattern in combinations(range(1, n + 1), m):
        p = pattern_bits(n, pattern)
        diag.append(p)
        for j in pattern:
            bj = _bit(n, j)
            for jp in range(1, n + 1):
                bjp = _bit(n, jp)
                if p & bjp:
                    continue
                rows.append(p)
                cols.append(p ^ bj | bjp)
                swaps.append(SwapTermSpec(p ^ bj, p | bjp))
    return TermPlan(n, nk, tuple(rows), tuple(cols), tuple(swaps), tuple(diag))


def plan_theorem3(basis: Theorem3Basis, k: int) -> TermPlan:
    n = basis.n_qubits
    nk, _ = nk_theorem3(basis, k)
    rows, cols, swaps = [], [], []
    for alpha, sa in enumerate(basis.states):
        for beta in basis.neighbors[alpha]:
            sb = basis.states[beta]
            diff = sa ^ sb
            first = 1 << (diff.bit_length() - 1)  # most significant = lowest position number
            rows.append(sa)
            cols.append(sb)
            swaps.append(swap_images(sa, sb, first))
    return TermPlan(n, nk, tuple(rows), tuple(cols), tuple(swaps), basis.states)


# --------------------------------------------------------------------------
# evaluators


def theorem1_value(rho: DensityMatrix, k: int) -> CriterionValue:
    return plan_theorem1(rho.n_qubits, k).evaluate(rho)


def theorem2_value(rho: DensityMatrix, k: int, m: int) -> CriterionValue:
    return plan_theorem2(rho.n_qubits, k, m).evaluate(rho)


def theorem3_value(rho: DensityMatrix, basis: Theorem3Basis, k: int) -> CriterionValue:
    if basis.n_qubits != rho.n_qubits:
        raise StateError(f"basis has {basis.n_qubits} qubits, state has {rho.n_qubits}")
    return plan_theorem3(basis, k).evaluate(rho)


# 1-based (row, col, sqrt-left, sqrt-right) for the twelve unordered 4-qubit pairs,
# followed by the six two-excitation diagonals.
_N4_PAIRS = (
    (4, 6, 2, 8), (4, 7, 3, 8), (4, 10, 2, 12), (4, 11, 3, 12),
    (6, 7, 5, 8), (6, 10, 2, 14), (6, 13, 5, 14), (7, 11, 3, 15),
    (7, 13, 5, 15), (10, 11, 9, 12), (10, 13, 9, 14), (11, 13, 9, 15),
)
_N4_DIAG = (4, 6, 7, 10, 11, 13)


def theorem1_value_n4_expanded(rho: DensityMatrix, k: int) -> float:
    """Hand-expanded four-qubit form of the two-excitation criterion."""
    if rho.n_qubits != 4:
        raise StateError(f"expanded form is for 4 qubits, got {rho.n_qubits}")
    nk = nk_theorem1(4, k)
    d = lambda idx: rho.diagonal(idx - 1)  # noqa: E731
    pairs = []
    for r, c, s, t in _N4_PAIRS:
        prod = d(s) * d(t)
        pairs.append(abs(rho.element(r - 1, c - 1)) - (math.sqrt(prod) if prod > 0 else 0.0))
    return 2 * math.fsum(pairs) - nk * math.fsum(d(z) for z in _N4_DIAG)


# --------------------------------------------------------------------------
# context + dispatch


VARIANTS = ("t1", "t2", "t3")


@dataclass(frozen=True)
class CriterionContext:
    n_qubits: int
    k: int
    variant: str = "t1"
    m: Optional[int] = None
    basis: Optional[Theorem3Basis] = None
    nk: int = field(init=False)

    def __post_init__(self) -> None:
        if self.variant not in VARIANTS:
            raise StateError(f"unknown criterion {self.variant!r}; expected one of {VARIANTS}")
        if self.variant == "t2" and self.m is None:
            raise StateError("criterion t2 needs m")
        if self.variant == "t3":
            if self.basis is None:
                raise StateError("criterion t3 needs a basis set")
            if self.basis.n_qubits != self.n_qubits:
                raise StateError("basis width does not match n_qubits")
        object.__setattr__(self, "nk", self.plan().nk)

    def plan(self) -> TermPlan:
        if self.variant == "t1":
            return plan_theorem1(self.n_qubits, self.k)
        if self.variant == "t2":
            return plan_theorem2(self.n_qubits, self.k, self.m)
        return _plan_t3_cached(self.basis, self.k)


@lru_cache(maxsize=64)
def _plan_t3_cached(basis: Theorem3Basis, k: int) -> TermPlan:
    return plan_theorem3(basis, k)


def detect(rho: DensityMatrix, ctx: CriterionContext) -> CriterionValue:
    if rho.n_qubits != ctx.n_qubits:
        raise StateError(f"state has {rho.n_qubits} qubits, context expects {ctx.n_qubits}")
    return ctx.plan().evaluate(rho)


def parse_basis_file(text: Union[bytes, str]) -> Theorem3Basis:
    """Parse ``{"n": N, "states": ["0011", ...]}``."""
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise MalformedStateError(f"invalid JSON: {exc}") from None
    if not isinstance(doc, dict) or not isinstance(doc.get("states"), list):
        raise MalformedStateError("basis file needs an object with a 'states' list")
    n = doc.get("n")
    if isinstance(n, bool) or not isinstance(n, int) or n < 1:
        raise MalformedStateError(f"'n' must be a positive integer, got {n!r}")
    return build_k_alpha([parse_bitstring(s, n) for s in doc["states"]], n_qubits=n)
