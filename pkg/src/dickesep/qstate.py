"""Sparse N-qubit states keyed by computational-basis bitmasks.

Qubit 1 is the most significant bit, so the 1-based matrix index of a basis
ket ``|b_1 ... b_N>`` is ``bits + 1``.  Operators never materialise the
``2**N`` dimension: a density matrix is an upper-triangular sparse map plus a
scalar multiple of the identity, which is how white noise is carried.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from itertools import combinations
from typing import Iterable, Mapping, Union

import numpy as np

PRUNE = 1e-15
NORM_TOL = 1e-12
TRACE_TOL = 1e-10
DIAG_TOL = 1e-12
HERMITIAN_TOL = 1e-12


class StateError(ValueError):
    """Invalid parameters or an object that breaks a state invariant."""


class StateFileError(StateError):
    """Base class for state-file diagnostics."""


class MalformedStateError(StateFileError):
    pass


class NonHermitianError(StateFileError):
    pass


class TraceError(StateFileError):
    pass


class NormError(StateFileError):
    pass


# --------------------------------------------------------------------------
# basis indexing


def position_bit(n_qubits: int, position: int) -> int:
    """Mask of the 1-based qubit ``position`` under the MSB-first convention."""
    if not 1 <= position <= n_qubits:
        raise StateError(f"qubit position {position} outside 1..{n_qubits}")
    return 1 << (n_qubits - position)


def bitstring(n_qubits: int, bits: int) -> str:
    return format(bits, f"0{n_qubits}b")


def parse_bitstring(text: str, n_qubits: int) -> int:
    if not isinstance(text, str) or len(text) != n_qubits or set(text) - {"0", "1"}:
        raise MalformedStateError(f"expected {n_qubits} characters of 0/1, got {text!r}")
    return int(text, 2)


@dataclass(frozen=True, order=True)
class BasisState:
    n_qubits: int
    bits: int

    def __post_init__(self) -> None:
        if self.n_qubits < 1:
            raise StateError("n_qubits must be positive")
        if not 0 <= self.bits < (1 << self.n_qubits):
            raise StateError(f"bits {self.bits} out of range for {self.n_qubits} qubits")

    @property
    def weight(self) -> int:
        return self.bits.bit_count()

    @property
    def matrix_index(self) -> int:
        """1-based row/column index in the ``2**N`` matrix."""
        return self.bits + 1

    def __str__(self) -> str:
        return bitstring(self.n_qubits, self.bits)


@dataclass(frozen=True)
class ExcitationPattern:
    n_qubits: int
    excited: tuple[int, ...]

    def __post_init__(self) -> None:
        excited = tuple(sorted(self.excited))
        if len(set(excited)) != len(excited):
            raise StateError(f"repeated positions in {self.excited}")
        for p in excited:
            if not 1 <= p <= self.n_qubits:
                raise StateError(f"position {p} outside 1..{self.n_qubits}")
        object.__setattr__(self, "excited", excited)


def pattern_bits(n_qubits: int, excited: Iterable[int]) -> int:
    bits = 0
    for p in excited:
        bits |= position_bit(n_qubits, p)
    return bits


def pattern_to_basis(p: ExcitationPattern) -> BasisState:
    return BasisState(p.n_qubits, pattern_bits(p.n_qubits, p.excited))


def basis_to_pattern(b: BasisState) -> ExcitationPattern:
    n = b.n_qubits
    return ExcitationPattern(n, tuple(t for t in range(1, n + 1) if b.bits >> (n - t) & 1))


def weight_masks(n_qubits: int, m: int) -> list[int]:
    """All weight-``m`` bitmasks, in lexicographic order of their position sets."""
    return [pattern_bits(n_qubits, c) for c in combinations(range(1, n_qubits + 1), m)]


def _as_bits(x: Union[BasisState, int], n_qubits: int) -> int:
    if isinstance(x, BasisState):
        if x.n_qubits != n_qubits:
            raise StateError(f"basis state has {x.n_qubits} qubits, operator has {n_qubits}")
        return x.bits
    if not 0 <= x < (1 << n_qubits):
        raise StateError(f"index {x} out of range for {n_qubits} qubits")
    return int(x)


# --------------------------------------------------------------------------
# states


@dataclass(frozen=True)
class PureState:
    n_qubits: int
    amplitudes: Mapping[int, complex]

    def __post_init__(self) -> None:
        if self.n_qubits < 1:
            raise StateError("n_qubits must be positive")
        dim = 1 << self.n_qubits
        amps = {}
        for key, value in self.amplitudes.items():
            bits = _as_bits(key, self.n_qubits) if isinstance(key, BasisState) else int(key)
            if not 0 <= bits < dim:
                raise StateError(f"basis index {bits} out of range")
            value = complex(value)
            if abs(value) >= PRUNE:
                amps[bits] = value
        norm = math.fsum(abs(v) ** 2 for v in amps.values())
        if abs(norm - 1.0) > NORM_TOL:
            raise NormError(f"state norm {norm!r} differs from 1 by more than {NORM_TOL}")
        object.__setattr__(self, "amplitudes", dict(sorted(amps.items())))

    @classmethod
    def from_vector(cls, vector: np.ndarray) -> "PureState":
        vector = np.asarray(vector, dtype=complex)
        n = int(vector.size).bit_length() - 1
        if vector.ndim != 1 or 1 << n != vector.size or n < 1:
            raise StateError("vector length must be a power of two")
        return cls(n, {int(i): vector[i] for i in np.flatnonzero(np.abs(vector) >= PRUNE)})

    def amplitude(self, x: Union[BasisState, int]) -> complex:
        return self.amplitudes.get(_as_bits(x, self.n_qubits), 0j)

    def to_vector(self) -> np.ndarray:
        out = np.zeros(1 << self.n_qubits, dtype=complex)
        for bits, value in self.amplitudes.items():
            out[bits] = value
        return out


@dataclass(frozen=True)
class DensityMatrix:
    """Hermitian operator ``identity_weight * I + S`` with ``S`` stored upper-triangular.

    ``entries`` maps ``(row, col)`` bitmasks with ``row <= col`` to complex
    values; the lower triangle is implied.
    """

    n_qubits: int
    entries: Mapping[tuple[int, int], complex]
    identity_weight: float = 0.0

    def __post_init__(self) -> None:
        if self.n_qubits < 1:
            raise StateError("n_qubits must be positive")
        dim = 1 << self.n_qubits
        clean = {}
        for (r, c), value in self.entries.items():
            r, c = int(r), int(c)
            if not (0 <= r < dim and 0 <= c < dim):
                raise StateError(f"entry ({r}, {c}) out of range")
            if r > c:
                raise StateError(f"entry ({r}, {c}) lies below the diagonal")
            value = complex(value)
            if r == c:
                if abs(value.imag) > HERMITIAN_TOL:
                    raise NonHermitianError(f"diagonal entry {bitstring(self.n_qubits, r)} is not real")
                value = complex(value.real, 0.0)
            if abs(value) >= PRUNE:
                clean[(r, c)] = value
        object.__setattr__(self, "entries", dict(sorted(clean.items())))
        object.__setattr__(self, "identity_weight", float(self.identity_weight))
        if self.identity_weight < -DIAG_TOL:
            raise StateError("negative identity weight")
        for (r, c), value in self.entries.items():
            if r == c and value.real + self.identity_weight < -DIAG_TOL:
                raise StateError(f"negative diagonal at {bitstring(self.n_qubits, r)}")
        tr = self.trace()
        if abs(tr - 1.0) > TRACE_TOL:
            raise TraceError(f"trace {tr!r} differs from 1 by more than {TRACE_TOL}")

    @property
    def dim(self) -> int:
        return 1 << self.n_qubits

    def trace(self) -> float:
        stored = math.fsum(v.real for (r, c), v in self.entries.items() if r == c)
        return stored + self.identity_weight * self.dim

    def diagonal(self, x: int) -> float:
        """Real diagonal entry; bitmask input, no range check."""
        v = self.entries.get((x, x))
        return self.identity_weight + (v.real if v is not None else 0.0)

    def element(self, row: Union[BasisState, int], col: Union[BasisState, int]) -> complex:
        r = _as_bits(row, self.n_qubits)
        c = _as_bits(col, self.n_qubits)
        if r == c:
            return complex(self.diagonal(r))
        if r < c:
            return self.entries.get((r, c), 0j)
        return self.entries.get((c, r), 0j).conjugate()

    @classmethod
    def from_pure(cls, psi: PureState) -> "DensityMatrix":
        return white_noise_mix(psi, 1.0)

    @classmethod
    def from_dense(cls, matrix: np.ndarray) -> "DensityMatrix":
        matrix = np.asarray(matrix, dtype=complex)
        dim = matrix.shape[0]
        n = dim.bit_length() - 1
        if matrix.shape != (dim, dim) or 1 << n != dim or n < 1:
            raise StateError("matrix must be square with power-of-two dimension")
        if not np.allclose(matrix, matrix.conj().T, atol=HERMITIAN_TOL, rtol=0):
            raise NonHermitianError("matrix is not Hermitian")
        rows, cols = np.nonzero(np.triu(np.abs(matrix) >= PRUNE))
        return cls(n, {(int(r), int(c)): matrix[r, c] for r, c in zip(rows, cols)})

    def to_dense(self) -> np.ndarray:
        if self.n_qubits > 14:
            raise StateError("refusing to build a dense matrix above 14 qubits")
        out = np.eye(self.dim, dtype=complex) * self.identity_weight
        for (r, c), value in self.entries.items():
            out[r, c] += value
            if r != c:
                out[c, r] += value.conjugate()
        return out


def dicke_state(n: int, m: int) -> PureState:
    """Equal superposition of the ``C(n, m)`` weight-``m`` basis states."""
    if n < 2 or not 1 <= m <= n - 1:
        raise StateError(f"need 1 <= m <= n-1, got n={n}, m={m}")
    amp = 1.0 / math.sqrt(math.comb(n, m))
    return PureState(n, {bits: amp for bits in weight_masks(n, m)})


def white_noise_mix(psi: PureState, a: float) -> DensityMatrix:
    """``a |psi><psi| + (1 - a) I / 2**N`` with the noise kept as an identity weight."""
    a = float(a)
    if not 0.0 <= a <= 1.0:
        raise StateError(f"mixing parameter {a} outside [0, 1]")
    items = list(psi.amplitudes.items())
    entries = {}
    if a > 0.0:
        for idx, (x, px) in enumerate(items):
            for y, py in items[idx:]:
                entries[(x, y)] = a * px * py.conjugate()
    return DensityMatrix(psi.n_qubits, entries, (1.0 - a) / (1 << psi.n_qubits))


def element(rho: DensityMatrix, row: Union[BasisState, int], col: Union[BasisState, int]) -> complex:
    return rho.element(row, col)


@dataclass(frozen=True)
class NoiseFamily:
    """The segment ``a -> a |base><base| + (1 - a) I / 2**N`` for ``a`` in [0, 1]."""

    base: PureState
    label: str = field(default="pure_noise", compare=False)

    @property
    def n_qubits(self) -> int:
        return self.base.n_qubits

    def realize(self, a: float) -> DensityMatrix:
        return white_noise_mix(self.base, a)

    @classmethod
    def dicke(cls, n: int, m: int) -> "NoiseFamily":
        return cls(dicke_state(n, m), label=f"dicke_noise(n={n}, m={m})")


# --------------------------------------------------------------------------
# state files


def _number(value: object, what: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise MalformedStateError(f"{what} must be a number, got {value!r}")
    return float(value)


def _qubit_count(doc: dict) -> int:
    n = doc.get("n")
    if isinstance(n, bool) or not isinstance(n, int) or n < 1:
        raise MalformedStateError(f"'n' must be a positive integer, got {n!r}")
    return n


def parse_state_file(text: Union[bytes, str]) -> Union[DensityMatrix, NoiseFamily]:
    """Parse a JSON state file into a validated density matrix or noise family."""
    if isinstance(text, bytes):
        try:
            text = text.decode("utf-8")
        except UnicodeDecodeError as exc:
            raise MalformedStateError(f"state file is not UTF-8: {exc}") from None
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise MalformedStateError(f"invalid JSON: {exc}") from None
    if not isinstance(doc, dict):
        raise MalformedStateError("state file must hold a JSON object")
    kind = doc.get("kind")
    if kind == "dicke_noise":
        n = _qubit_count(doc)
        m = doc.get("m")
        if isinstance(m, bool) or not isinstance(m, int):
            raise MalformedStateError(f"'m' must be an integer, got {m!r}")
        try:
            return NoiseFamily.dicke(n, m)
        except StateError as exc:
            raise MalformedStateError(str(exc)) from None
    if kind == "pure_noise":
        n = _qubit_count(doc)
        amps: dict[int, complex] = {}
        rows = doc.get("amplitudes")
        if not isinstance(rows, list):
            raise MalformedStateError("'amplitudes' must be a list")
        for row in rows:
            if not isinstance(row, list) or len(row) != 3:
                raise MalformedStateError(f"amplitude row must be [bits, re, im], got {row!r}")
            bits = parse_bitstring(row[0], n)
            if bits in amps:
                raise MalformedStateError(f"duplicate amplitude for {row[0]}")
            amps[bits] = complex(_number(row[1], "re"), _number(row[2], "im"))
        return NoiseFamily(PureState(n, amps))
    if kind == "density":
        n = _qubit_count(doc)
        rows = doc.get("entries")
        if not isinstance(rows, list):
            raise MalformedStateError("'entries' must be a list")
        entries: dict[tuple[int, int], complex] = {}
        for row in rows:
            if not isinstance(row, list) or len(row) != 4:
                raise MalformedStateError(f"entry must be [row, col, re, im], got {row!r}")
            r = parse_bitstring(row[0], n)
            c = parse_bitstring(row[1], n)
            value = complex(_number(row[2], "re"), _number(row[3], "im"))
            if r > c:
                # lower-triangle entry: accepted only as the conjugate of the upper one
                r, c, value = c, r, value.conjugate()
            if (r, c) in entries:
                if abs(entries[(r, c)] - value) > HERMITIAN_TOL:
                    raise NonHermitianError(
                        f"entries ({row[0]}, {row[1]}) and its transpose are not conjugate"
                    )
                continue
            entries[(r, c)] = value
        return DensityMatrix(n, entries)
    raise MalformedStateError(f"unknown state kind {kind!r}")


def dump_density(rho: DensityMatrix) -> dict:
    """Explicit-form JSON document for ``rho`` (identity weight folded into the diagonal)."""
    n = rho.n_qubits
    entries = dict(rho.entries)
    if rho.identity_weight:
        for x in range(rho.dim):
            entries[(x, x)] = entries.get((x, x), 0j) + rho.identity_weight
    return {
        "kind": "density",
        "n": n,
        "entries": [
            [bitstring(n, r), bitstring(n, c), v.real, v.imag]
            for (r, c), v in sorted(entries.items())
        ],
    }


def dump_family(family: NoiseFamily) -> dict:
    n = family.n_qubits
    return {
        "kind": "pure_noise",
        "n": n,
        "amplitudes": [[bitstring(n, b), v.real, v.imag] for b, v in family.base.amplitudes.items()],
    }
