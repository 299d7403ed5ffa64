"""Stationary distributions, irreducibility, ergodic decomposition, and
reversibility diagnostics (Kolmogorov cycle products)."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np
import scipy.sparse as sp

from .exceptions import DimensionMismatch, InconsistentSupport, NotConverged
from .sparse_core import ProbabilityVector, SparseStochasticMatrix

__all__ = [
    "StationarySolveOptions",
    "ErgodicDecomposition",
    "CycleCheckResult",
    "stationary_distribution",
    "irreducible_stationary",
    "stationary_mixture",
    "strongly_connected_components",
    "ergodic_decomposition",
    "kolmogorov_cycle_check",
    "is_irreducible",
]


@dataclass(frozen=True)
class StationarySolveOptions:
    """Controls for the power-iteration stationary solve.

    ``initial_distribution`` defaults to the uniform distribution, which is
    strictly positive as required for transient-state detection.
    """

    max_iterations: Optional[int] = None  # default 100 * n
    tolerance: float = 1e-13
    initial_distribution: Optional[ProbabilityVector] = None

    def __post_init__(self):
        if self.tolerance <= 0.0:
            raise ValueError("tolerance must be positive")
        init = self.initial_distribution
        if init is not None and not init.is_strictly_positive():
            raise ValueError("initial distribution must be strictly positive")


def stationary_distribution(
    P: SparseStochasticMatrix, opts: StationarySolveOptions | None = None
) -> ProbabilityVector:
    """Stationary distribution by power iteration.

    Iterates ``x <- x P`` from a strictly positive start until
    ``||x P - x||_inf`` drops below the tolerance.  If the residual sequence
    turns non-monotone (a symptom of a periodic chain) the iteration switches
    to the damped map ``x <- (x P + x) / 2``, which has the same stationary
    vectors but kills the oscillation.

    For a reducible chain the limit depends on the start, but its zero
    entries identify exactly the transient states.

    Raises
    ------
    NotConverged
        If the residual is still above tolerance after ``max_iterations``
        (default ``100 * n``); this signals periodicity, a spectral gap too
        small for plain iteration, or a tolerance that is too tight.
    """
    opts = opts or StationarySolveOptions()
    csr = P.csr
    n = P.n
    max_iterations = opts.max_iterations if opts.max_iterations is not None else 100 * n
    if opts.initial_distribution is not None:
        if opts.initial_distribution.n != n:
            raise DimensionMismatch("initial distribution has wrong length")
        x = opts.initial_distribution.values.copy()
    else:
        x = np.full(n, 1.0 / n)

    damped = False
    window: list[float] = []
    x_next = x @ csr
    residual = float(np.abs(x_next - x).max())
    for iteration in range(1, max_iterations + 1):
        if residual <= opts.tolerance:
            return _finish_stationary(P, x_next)
        x = 0.5 * (x + x_next) if damped else x_next
        x /= x.sum()
        x_next = x @ csr
        residual = float(np.abs(x_next - x).max())
        if not damped:
            window.append(residual)
            if len(window) > 50:
                window.pop(0)
                increases = sum(
                    1 for a, b in zip(window, window[1:]) if b > a * (1.0 + 1e-12)
                )
                no_progress = window[-1] >= window[0] * (1.0 - 1e-9)
                if (increases >= 3 or no_progress) and residual > 10.0 * opts.tolerance:
                    damped = True
                    window.clear()
    if residual <= opts.tolerance:
        return _finish_stationary(P, x_next)
    raise NotConverged(max_iterations, residual)


def _finish_stationary(P: SparseStochasticMatrix, x: np.ndarray) -> ProbabilityVector:
    """Clip and renormalize a converged iterate.

    Mass on structurally transient states (states outside every closed
    component) decays geometrically but never reaches exact zero in finitely
    many iterations; its limit is zero, so it is set to zero here.  This is
    what makes "the zero set identifies the transient states" hold exactly.
    """
    x = np.maximum(x, 0.0)
    _, open_components = _closed_components(P)
    for members in open_components:
        x[members] = 0.0
    return ProbabilityVector(x / x.sum())


def _gth(P_dense: np.ndarray) -> np.ndarray:
    """Stationary vector of an irreducible row-stochastic matrix by
    Grassmann-Taksar-Heyman elimination (no subtractions, so entries come out
    accurate to machine precision even for nearly uncoupled chains)."""
    A = np.array(P_dense, dtype=float)
    n = A.shape[0]
    for k in range(n - 1, 0, -1):
        s = A[k, :k].sum()
        if s <= 0.0:
            raise ValueError("matrix block is not irreducible")
        A[:k, k] /= s
        A[:k, :k] += np.outer(A[:k, k], A[k, :k])
    pi = np.zeros(n)
    pi[0] = 1.0
    for k in range(1, n):
        pi[k] = A[0, k] + pi[1:k] @ A[1:k, k]
    return pi / pi.sum()


def irreducible_stationary(P: SparseStochasticMatrix) -> ProbabilityVector:
    """Stationary distribution of an irreducible chain by direct elimination.

    Unlike power iteration this does not depend on the spectral gap, so it is
    the right tool for metastable chains.  Uses dense GTH elimination; the
    cost is O(n^3), fine for blocks up to a few thousand states.
    """
    return ProbabilityVector(_gth(P.toarray()))


def strongly_connected_components(P) -> list[np.ndarray]:
    """Strongly connected components of the support digraph, in reverse
    topological order (every component is emitted before any component that
    can reach it).

    Uses an iterative depth-first search with the classic low-link bookkeeping;
    vertices are visited in index order, so the output is deterministic.
    Each component is returned as an ascending index array.
    """
    csr = P.csr if isinstance(P, SparseStochasticMatrix) else sp.csr_matrix(P)
    n = csr.shape[0]
    indptr, indices = csr.indptr, csr.indices

    order = np.full(n, -1, dtype=np.int64)  # discovery index
    low = np.zeros(n, dtype=np.int64)
    on_stack = np.zeros(n, dtype=bool)
    stack: list[int] = []
    components: list[np.ndarray] = []
    counter = 0

    for root in range(n):
        if order[root] != -1:
            continue
        # each work item is (vertex, next edge offset)
        work = [(root, indptr[root])]
        order[root] = low[root] = counter
        counter += 1
        stack.append(root)
        on_stack[root] = True
        while work:
            v, ptr = work[-1]
            if ptr < indptr[v + 1]:
                work[-1] = (v, ptr + 1)
                w = indices[ptr]
                if order[w] == -1:
                    order[w] = low[w] = counter
                    counter += 1
                    stack.append(w)
                    on_stack[w] = True
                    work.append((w, indptr[w]))
                elif on_stack[w]:
                    if order[w] < low[v]:
                        low[v] = order[w]
            else:
                work.pop()
                if work:
                    parent = work[-1][0]
                    if low[v] < low[parent]:
                        low[parent] = low[v]
                if low[v] == order[v]:
                    members = []
                    while True:
                        w = stack.pop()
                        on_stack[w] = False
                        members.append(w)
                        if w == v:
                            break
                    components.append(np.array(sorted(members), dtype=np.intp))
    return components


def is_irreducible(P) -> bool:
    """True when the support digraph is strongly connected."""
    return len(strongly_connected_components(P)) == 1


def _closed_components(P: SparseStochasticMatrix):
    """Split the SCCs of ``P`` into closed (recurrent) and open (transient)."""
    csr = P.csr
    components = strongly_connected_components(P)
    comp_id = np.empty(P.n, dtype=np.int64)
    for idx, members in enumerate(components):
        comp_id[members] = idx
    closed, open_ = [], []
    for idx, members in enumerate(components):
        sub = csr[members]
        leaves = comp_id[sub.indices] != idx
        (open_ if bool(leaves.any()) else closed).append(members)
    return closed, open_


@dataclass(frozen=True)
class ErgodicDecomposition:
    """Ergodic classes, transient states, and the block-order permutation.

    ``permutation`` lists the original indices class by class, transient
    states last, so ``P[permutation][:, permutation]`` is block lower
    triangular with the irreducible class blocks on top.
    """

    classes: list = field(default_factory=list)
    transient: np.ndarray = field(default_factory=lambda: np.array([], dtype=np.intp))
    permutation: np.ndarray = field(default_factory=lambda: np.array([], dtype=np.intp))

    @property
    def num_classes(self) -> int:
        return len(self.classes)


def ergodic_decomposition(
    P: SparseStochasticMatrix, pi: ProbabilityVector, tolerance: float = 1e-12
) -> ErgodicDecomposition:
    """Split the state space into ergodic classes and transient states.

    The transient set is the complement of ``supp(pi)``; the classes are the
    strongly connected components of ``P`` restricted to ``supp(pi)``.  Each
    class must be closed (its rows sum to 1 inside the class); otherwise the
    supplied ``pi`` cannot be a stationary vector and ``InconsistentSupport``
    is raised.
    """
    if P.n != pi.n:
        raise DimensionMismatch("dimensions of P and pi disagree")
    support = pi.support
    transient = np.setdiff1d(np.arange(P.n), support, assume_unique=False)

    csr = P.csr
    inside = csr[support][:, support]
    inside_mass = np.asarray(inside.sum(axis=1)).ravel()
    outflow = P.row_sums[support] - inside_mass
    if outflow.size and outflow.max() > tolerance:
        bad = int(outflow.argmax())
        raise InconsistentSupport(int(support[bad]), float(outflow[bad]))

    classes = [support[members] for members in strongly_connected_components(inside)]
    classes.sort(key=lambda members: int(members[0]))

    row_sums = P.row_sums
    for members in classes:
        block = csr[members][:, members]
        block_sums = np.asarray(block.sum(axis=1)).ravel()
        defects = np.abs(block_sums - row_sums[members])
        if members.size and defects.max() > tolerance:
            bad = members[int(defects.argmax())]
            raise InconsistentSupport(int(bad), float(defects.max()))

    permutation = np.concatenate([*classes, transient]) if classes else transient
    return ErgodicDecomposition(
        classes=classes,
        transient=np.asarray(transient, dtype=np.intp),
        permutation=np.asarray(permutation, dtype=np.intp),
    )


def stationary_mixture(
    P: SparseStochasticMatrix,
    initial_distribution: ProbabilityVector | None = None,
) -> ProbabilityVector:
    """The limit of ``x0^T P^k`` computed in closed form.

    Decomposes the chain into closed classes and transient states, solves each
    class stationary vector by GTH elimination, and weights the classes by the
    probability that a walk started from ``initial_distribution`` (uniform by
    default) is absorbed into them.  Transient states get exactly zero mass.

    This equals the power-iteration limit whenever that limit exists, but it
    is immune to small spectral gaps and periodicity, so it is the default
    stationary solve of the end-to-end pipeline.
    """
    n = P.n
    if initial_distribution is None:
        x0 = np.full(n, 1.0 / n)
    else:
        if initial_distribution.n != n:
            raise DimensionMismatch("initial distribution has wrong length")
        x0 = initial_distribution.values

    closed, open_ = _closed_components(P)
    if not closed:
        raise ValueError("chain has no closed class; row sums cannot all be 1")

    weights = np.array([x0[members].sum() for members in closed])
    if open_:
        transient = np.concatenate(open_)
        transient.sort()
        csr = P.csr
        T_block = csr[transient][:, transient].toarray()
        # absorption probabilities: (I - P_TT) H = [sum of P_T,class per class]
        B = np.column_stack(
            [
                np.asarray(csr[transient][:, members].sum(axis=1)).ravel()
                for members in closed
            ]
        )
        H = np.linalg.solve(np.eye(len(transient)) - T_block, B)
        weights = weights + x0[transient] @ H

    pi = np.zeros(n)
    for members, weight in zip(closed, weights):
        if weight <= 0.0:
            continue
        block = P.submatrix(members, stochastic=True)
        pi[members] = weight * _gth(block.toarray())
    return ProbabilityVector(pi / pi.sum())


@dataclass(frozen=True)
class CycleCheckResult:
    """Outcome of the cycle-product reversibility check."""

    passed: bool
    max_length_checked: int
    cycle: Optional[tuple] = None
    forward_product: float = 0.0
    reverse_product: float = 0.0

    def __bool__(self):
        return self.passed


def kolmogorov_cycle_check(
    P: SparseStochasticMatrix,
    max_cycle_length: int | None = None,
    relative_tolerance: float = 1e-10,
) -> CycleCheckResult:
    """Compare forward and reverse transition products over simple cycles.

    A chain is reversible exactly when for every cycle ``i1 -> ... -> ik -> i1``
    the forward product of transition probabilities equals the reverse one.
    This enumerates all simple cycles of length up to ``max_cycle_length``
    (default ``n``) on the support and returns the first violating cycle in
    lexicographic order, or a pass verdict.  Cycles of length 1 and 2 are
    skipped since both products coincide termwise.

    Enumeration is exponential in the worst case; treat large caps as
    advisory.
    """
    n = P.n
    cap = n if max_cycle_length is None else int(max_cycle_length)
    csr = P.csr
    indptr, indices, data = csr.indptr, csr.indices, csr.data
    lookup = {}
    for i in range(n):
        for ptr in range(indptr[i], indptr[i + 1]):
            lookup[(i, int(indices[ptr]))] = float(data[ptr])

    def reverse_product(path):
        prod = 1.0
        closed = path + (path[0],)
        for a, b in zip(closed, closed[1:]):
            value = lookup.get((b, a))
            if value is None:
                return 0.0
            prod *= value
        return prod

    for start in range(n):
        # path stack DFS: only visit vertices greater than start so every
        # cycle is found exactly once, anchored at its smallest vertex
        path = [start]
        forward = [1.0]
        iters = [iter(range(indptr[start], indptr[start + 1]))]
        while iters:
            try:
                ptr = next(iters[-1])
            except StopIteration:
                iters.pop()
                path.pop()
                forward.pop()
                continue
            nxt = int(indices[ptr])
            weight = float(data[ptr])
            if nxt == start and len(path) >= 3:
                fwd = forward[-1] * weight
                rev = reverse_product(tuple(path))
                if abs(fwd - rev) > relative_tolerance * max(abs(fwd), abs(rev)):
                    return CycleCheckResult(
                        passed=False,
                        max_length_checked=cap,
                        cycle=tuple(path),
                        forward_product=fwd,
                        reverse_product=rev,
                    )
                continue
            if nxt <= start or nxt in path or len(path) >= cap:
                continue
            path.append(nxt)
            forward.append(forward[-1] * weight)
            iters.append(iter(range(indptr[nxt], indptr[nxt + 1])))
    return CycleCheckResult(passed=True, max_length_checked=cap)
