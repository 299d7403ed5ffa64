from types import SimpleNamespace

import numpy as np
import pytest

from revmarkov import (
    LangevinConfig,
    ProbabilityVector,
    SparseStochasticMatrix,
    SparsityPattern,
    count_matrix,
    langevin_trajectory,
    row_normalize,
)

# -- worked 4x4 example: a one-way ring plus one reciprocated edge -------------


@pytest.fixture(scope="session")
def ring4():
    """The 4-state chain whose Metropolis-Hastings adjustment is known exactly.

    T sends 1 -> 2 -> 3 -> 1 with certainty (state 3 splitting with state 4),
    its stationary vector is (1/5, 1/5, 2/5, 1/5), and the adjustment must
    eliminate the non-reciprocated edges, leaving only the 3 <-> 4 link plus
    diagonal entries.
    """
    T = SparseStochasticMatrix.from_dense(
        [
            [0.0, 1.0, 0.0, 0.0],
            [0.0, 0.0, 1.0, 0.0],
            [0.5, 0.0, 0.0, 0.5],
            [0.0, 0.0, 1.0, 0.0],
        ]
    )
    pi = ProbabilityVector([0.2, 0.2, 0.4, 0.2])
    adjusted = np.array(
        [
            [1.0, 0.0, 0.0, 0.0],
            [0.0, 1.0, 0.0, 0.0],
            [0.0, 0.0, 0.5, 0.5],
            [0.0, 0.0, 1.0, 0.0],
        ]
    )
    return SimpleNamespace(T=T, pi=pi, adjusted=adjusted)


# -- random instance factories -------------------------------------------------


def _random_chain(n, seed, density=0.4, ensure_irreducible=True):
    rng = np.random.default_rng(seed)
    mask = rng.random((n, n)) < density
    if ensure_irreducible:
        # a directed ring guarantees strong connectivity
        mask[np.arange(n), (np.arange(n) + 1) % n] = True
    np.fill_diagonal(mask, True)
    values = np.where(mask, rng.random((n, n)), 0.0)
    return row_normalize(values)


def _random_reversible(n, seed, density=0.5):
    rng = np.random.default_rng(seed)
    W = rng.random((n, n)) * (rng.random((n, n)) < density)
    W = W + W.T + np.eye(n) * 0.5
    # a symmetric path keeps the chain irreducible (and exactly reversible)
    idx = np.arange(n - 1)
    W[idx, idx + 1] += 0.25
    W[idx + 1, idx] = W[idx, idx + 1]
    pi = ProbabilityVector(W.sum(axis=1) / W.sum())
    return row_normalize(W), pi


def _random_symmetric_pattern(n, seed, extra_edges):
    rng = np.random.default_rng(seed)
    pattern = np.eye(n)
    pairs = [(i, j) for i in range(n) for j in range(i + 1, n)]
    rng.shuffle(pairs)
    for i, j in pairs[:extra_edges]:
        pattern[i, j] = pattern[j, i] = 1.0
    return SparsityPattern(pattern)


@pytest.fixture
def chain_factory():
    return _random_chain


@pytest.fixture
def reversible_factory():
    return _random_reversible


@pytest.fixture
def pattern_factory():
    return _random_symmetric_pattern


# -- torsion-dynamics data (simulated once per session) ------------------------

BUTANE_DESK_STEPS = 50_000_000


@pytest.fixture(scope="session")
def butane():
    """Desk-scale torsion run: trajectory, counts, estimated chain."""
    cfg = LangevinConfig(steps=BUTANE_DESK_STEPS)
    import time

    t0 = time.perf_counter()
    bins = langevin_trajectory(cfg)
    simulate_seconds = time.perf_counter() - t0
    counts = count_matrix(bins, cfg.bins)
    P = row_normalize(counts)
    return SimpleNamespace(
        cfg=cfg, bins=bins, counts=counts, P=P, simulate_seconds=simulate_seconds
    )


@pytest.fixture(scope="session")
def butane_pattern_dense():
    """Tridiagonal-with-corners support on 30 states, diagonal included."""
    n = 30
    dense = np.zeros((n, n))
    for i in range(n):
        dense[i, i] = 1.0
        dense[i, (i + 1) % n] = 1.0
        dense[i, (i - 1) % n] = 1.0
    return dense


# -- acceptance reporting -------------------------------------------------------


class AcceptanceLog:
    def __init__(self):
        self.entries = []

    def record(self, number, description, passed, detail=""):
        self.entries.append((number, description, bool(passed), detail))


@pytest.fixture(scope="session")
def acceptance_log(request):
    log = AcceptanceLog()
    request.session._acceptance_log = log
    return log


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    log = getattr(terminalreporter._session, "_acceptance_log", None)
    if log is None or not log.entries:
        return
    terminalreporter.section("acceptance criteria")
    for number, description, passed, detail in sorted(log.entries):
        status = "PASS" if passed else "FAIL"
        line = f"criterion {number}: {status} - {description}"
        if detail:
            line += f" ({detail})"
        terminalreporter.write_line(line)
