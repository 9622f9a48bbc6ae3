import numpy as np
import pytest

from dickesep.criteria import build_k_alpha
from dickesep.qstate import DensityMatrix, PureState

EXAMPLE_V = ("0011", "0101", "0110", "1010")

_ACCEPTANCE_LINES: list[str] = []


def record(line: str) -> None:
    print(line)
    _ACCEPTANCE_LINES.append(line)


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in _ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture
def example_basis():
    return build_k_alpha([int(s, 2) for s in EXAMPLE_V], n_qubits=4)


@pytest.fixture
def example_phi():
    return PureState(4, {int(s, 2): 0.5 for s in EXAMPLE_V})


def random_psd(n: int, rng: np.random.Generator, rank: int | None = None) -> np.ndarray:
    """Random trace-1 positive semidefinite matrix on n qubits."""
    dim = 1 << n
    g = rng.standard_normal((dim, rank or dim)) + 1j * rng.standard_normal((dim, rank or dim))
    rho = g @ g.conj().T
    return rho / np.trace(rho).real


def random_density(n: int, rng: np.random.Generator) -> DensityMatrix:
    return DensityMatrix.from_dense(random_psd(n, rng))


# ---------------------------------------------------------------------------
# dense reference implementation, written directly from the criterion
# statement (two-copy swap operators built explicitly, no diagonal shortcut)


def swap_operator(n: int, position: int) -> np.ndarray:
    """Permutation on H (x) H exchanging qubit ``position`` (1-based) between copies."""
    dim = 1 << n
    bit = 1 << (n - position)
    perm = np.zeros((dim * dim, dim * dim))
    for x in range(dim):
        for y in range(dim):
            flip = (x ^ y) & bit
            perm[(x ^ flip) * dim + (y ^ flip), x * dim + y] = 1.0
    return perm


def two_copy_expectation(rho: np.ndarray, swap: np.ndarray, x: int, y: int) -> float:
    dim = rho.shape[0]
    e = np.zeros(dim * dim)
    e[x * dim + y] = 1.0
    v = swap @ e
    return float(np.real(v.conj() @ np.kron(rho, rho) @ v))


def dense_theorem1(rho: np.ndarray, n: int, nk: int) -> float:
    """Two-excitation criterion evaluated by explicit two-copy contraction."""
    swaps = {j: swap_operator(n, j) for j in range(1, n + 1)}
    phi = lambda *ps: sum(1 << (n - p) for p in ps)  # noqa: E731
    a = 0.0
    for i in range(1, n + 1):
        for j in range(1, n + 1):
            for jp in range(1, n + 1):
                if len({i, j, jp}) < 3:
                    continue
                x, y = phi(i, j), phi(i, jp)
                two = two_copy_expectation(rho, swaps[j], x, y)
                a += abs(rho[x, y]) - np.sqrt(max(two, 0.0))
    b = sum(rho[phi(i, j), phi(i, j)].real for i in range(1, n + 1) for j in range(i + 1, n + 1))
    return a - nk * b
