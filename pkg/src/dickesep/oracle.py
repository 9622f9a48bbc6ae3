"""Brute-force ground truth: k-partitions and random k-separable states.

A k-separable pure state is a tensor product of random block states over a
k-partition; mixed states are Dirichlet-weighted mixtures of such products,
each term under its own randomly chosen partition.  ``soundness_scan`` feeds
them through a criterion and records the largest value seen, which must never
be positive beyond rounding.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import Optional, Union

import numpy as np

from .criteria import CriterionContext, detect
from .qstate import DensityMatrix, PureState, StateError, dump_density

VIOLATION_TOL = 1e-9

Seed = Union[int, np.random.SeedSequence, tuple, list]


@dataclass(frozen=True, order=True)
class PartitionSpec:
    blocks: tuple[tuple[int, ...], ...]

    def __post_init__(self) -> None:
        blocks = tuple(sorted(tuple(sorted(b)) for b in self.blocks))
        if any(not b for b in blocks):
            raise StateError("partition blocks must be nonempty")
        flat = [p for b in blocks for p in b]
        if sorted(flat) != list(range(1, len(flat) + 1)):
            raise StateError(f"blocks {self.blocks} do not partition 1..{len(flat)}")
        object.__setattr__(self, "blocks", blocks)

    @property
    def k(self) -> int:
        return len(self.blocks)

    @property
    def n_qubits(self) -> int:
        return sum(len(b) for b in self.blocks)

    def __str__(self) -> str:
        sep = "," if self.n_qubits >= 10 else ""
        return "|".join(sep.join(map(str, b)) for b in self.blocks)


def enumerate_k_partitions(n: int, k: int) -> list[PartitionSpec]:
    """All partitions of ``{1..n}`` into exactly ``k`` blocks, sorted."""
    if not 1 <= k <= n:
        raise StateError(f"need 1 <= k <= n, got n={n}, k={k}")
    out: list[PartitionSpec] = []
    # restricted growth strings: label[i] <= max(label[:i]) + 1
    labels = [0] * n

    def grow(i: int, used: int) -> None:
        if n - i < k - used:
            return
        if i == n:
            if used == k:
                blocks = [[] for _ in range(k)]
                for pos, lab in enumerate(labels, start=1):
                    blocks[lab].append(pos)
                out.append(PartitionSpec(tuple(map(tuple, blocks))))
            return
        for lab in range(min(used + 1, k)):
            labels[i] = lab
            grow(i + 1, max(used, lab + 1))

    grow(0, 0)
    return sorted(out)


@lru_cache(maxsize=1024)
def _block_indices(partition: PartitionSpec) -> tuple[np.ndarray, ...]:
    """For each block, the block-local index of every global basis state."""
    n = partition.n_qubits
    x = np.arange(1 << n, dtype=np.int64)
    out = []
    for block in partition.blocks:
        local = np.zeros_like(x)
        for pos in block:
            local = (local << 1) | ((x >> (n - pos)) & 1)
        out.append(local)
    return tuple(out)


def _product_vector(partition: PartitionSpec, rng: np.random.Generator) -> np.ndarray:
    psi = np.ones(1 << partition.n_qubits, dtype=complex)
    for block, idx in zip(partition.blocks, _block_indices(partition)):
        dim = 1 << len(block)
        amp = rng.standard_normal(dim) + 1j * rng.standard_normal(dim)
        amp /= np.linalg.norm(amp)
        psi *= amp[idx]
    return psi


def random_product_pure(partition: PartitionSpec, seed: Seed) -> PureState:
    return PureState.from_vector(_product_vector(partition, np.random.default_rng(seed)))


def _mixed_dense(partitions: list[PartitionSpec], terms: int, rng: np.random.Generator) -> np.ndarray:
    weights = rng.dirichlet(np.ones(terms))
    dim = 1 << partitions[0].n_qubits
    rho = np.zeros((dim, dim), dtype=complex)
    for w in weights:
        psi = _product_vector(partitions[rng.integers(len(partitions))], rng)
        rho += w * np.outer(psi, psi.conj())
    return rho


def random_k_separable_mixed(n: int, k: int, terms: int, seed: Seed) -> DensityMatrix:
    if terms < 1:
        raise StateError("need at least one mixture term")
    rho = _mixed_dense(enumerate_k_partitions(n, k), terms, np.random.default_rng(seed))
    return DensityMatrix.from_dense(rho)


@dataclass
class SoundnessReport:
    n_qubits: int
    k: int
    criterion: str
    pure_trials: int
    mixed_trials: int
    max_pure: float
    max_mixed: float
    worst_seed: tuple[int, int]
    worst_kind: str
    violation: Optional[dict] = None

    @property
    def max_value(self) -> float:
        return max(self.max_pure, self.max_mixed)

    @property
    def ok(self) -> bool:
        return self.violation is None


def sample_k_separable(
    n: int, k: int, trials: int, seed: int, mixed_trials: int, terms: int = 4
) -> tuple[list[np.ndarray], list[np.ndarray]]:
    """Chunked batches of k-separable pure vectors and mixed density matrices.

    Pure trial ``t`` draws from ``default_rng([seed, t])``, mixed trial ``t``
    from ``default_rng([seed, trials + t])``.
    """
    partitions = enumerate_k_partitions(n, k)
    pure = []
    for start in range(0, trials, 2048):
        batch = []
        for t in range(start, min(trials, start + 2048)):
            rng = np.random.default_rng([seed, t])
            batch.append(_product_vector(partitions[rng.integers(len(partitions))], rng))
        pure.append(np.array(batch))
    mixed = []
    for start in range(0, mixed_trials, 128):
        stop = min(mixed_trials, start + 128)
        mixed.append(
            np.array(
                [_mixed_dense(partitions, terms, np.random.default_rng([seed, trials + t])) for t in range(start, stop)]
            )
        )
    return pure, mixed


def soundness_scan(
    n: int,
    k: int,
    criterion: CriterionContext,
    trials: int,
    seed: int,
    mixed_trials: Optional[int] = None,
    terms: int = 4,
) -> SoundnessReport:
    """Largest criterion value over random k-separable states.

    The worst state's seed pair is kept in the report so it can be regenerated;
    values above ``VIOLATION_TOL`` attach a serialised violation artifact.
    """
    if trials < 1:
        raise StateError("trials must be >= 1")
    if criterion.n_qubits != n or criterion.k != k:
        raise StateError("criterion context does not match n and k")
    if mixed_trials is None:
        mixed_trials = max(1, trials // 10)
    partitions = enumerate_k_partitions(n, k)
    plan = criterion.plan()
    pure, mixed = sample_k_separable(n, k, trials, seed, mixed_trials, terms)
    pure_vals = np.concatenate([plan.evaluate_vectors(b) for b in pure])
    mixed_vals = np.concatenate([plan.evaluate_dense(b) for b in mixed]) if mixed else np.empty(0)

    max_pure = float(pure_vals.max())
    max_mixed = float(mixed_vals.max()) if mixed_trials else -np.inf
    if max_pure >= max_mixed:
        kind, idx = "pure", int(pure_vals.argmax())
    else:
        kind, idx = "mixed", trials + int(mixed_vals.argmax())
    report = SoundnessReport(
        n, k, criterion.variant, trials, mixed_trials, max_pure, max_mixed, (seed, idx), kind
    )
    if report.max_value > VIOLATION_TOL:
        report.violation = violation_artifact(report, criterion, partitions, terms)
    return report


def regenerate(report: SoundnessReport, partitions: list[PartitionSpec], terms: int = 4) -> DensityMatrix:
    """Rebuild the worst state recorded in ``report``."""
    rng = np.random.default_rng(list(report.worst_seed))
    if report.worst_kind == "pure":
        psi = _product_vector(partitions[rng.integers(len(partitions))], rng)
        return DensityMatrix.from_pure(PureState.from_vector(psi))
    return DensityMatrix.from_dense(_mixed_dense(partitions, terms, rng))


def violation_artifact(
    report: SoundnessReport, criterion: CriterionContext, partitions: list[PartitionSpec], terms: int
) -> dict:
    rho = regenerate(report, partitions, terms)
    value = detect(rho, criterion).value
    return {
        "state": dump_density(rho),
        "report": {"criterion": criterion.variant, "k": criterion.k, "value": value},
    }
