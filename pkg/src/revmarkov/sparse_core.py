"""Sparse stochastic matrices, probability vectors, sparsity patterns, and the
residual functionals the rest of the package asserts against.

All types are immutable after construction (their numpy buffers are marked
read-only) and all operations are pure functions, so values can be shared
freely across threads.
"""

from __future__ import annotations

import numpy as np
import scipy.sparse as sp

from .exceptions import DimensionMismatch, ZeroRow

__all__ = [
    "SparseStochasticMatrix",
    "ProbabilityVector",
    "SparsityPattern",
    "row_normalize",
    "detailed_balance_residual",
    "frobenius_distance",
    "symmetrized_pattern",
    "stochasticity_residual",
    "stationarity_residual",
]

#: Row sums may deviate from 1 by at most this much for a matrix flagged stochastic.
STOCHASTIC_TOL = 1e-12


def _canonical_csr(matrix, dtype=float) -> sp.csr_matrix:
    """Copy ``matrix`` into canonical CSR form: summed duplicates, no stored
    zeros, sorted column indices."""
    csr = sp.csr_matrix(matrix, dtype=dtype, copy=True)
    csr.sum_duplicates()
    csr.eliminate_zeros()
    csr.sort_indices()
    return csr


def _freeze(csr: sp.csr_matrix) -> sp.csr_matrix:
    for buf in (csr.data, csr.indices, csr.indptr):
        buf.setflags(write=False)
    return csr


class SparseStochasticMatrix:
    """Square nonnegative sparse matrix in canonical row-major CSR form.

    Parameters
    ----------
    matrix : array_like or scipy sparse
        Square matrix with nonnegative entries.
    stochastic : bool, optional
        When True (default) every row sum must equal 1 within ``1e-12``.
        Pass False for matrices that are merely nonnegative (count matrices,
        perturbations of stochastic matrices, ...).

    Notes
    -----
    Canonical form means entries are stored row-major with sorted columns,
    without duplicates and without explicit zeros, so two equal matrices have
    identical buffers.  Stored buffers are read-only.
    """

    __slots__ = ("_csr", "_row_sums", "stochastic")

    def __init__(self, matrix, stochastic: bool = True):
        csr = _canonical_csr(matrix)
        if csr.shape[0] != csr.shape[1]:
            raise DimensionMismatch(f"matrix must be square, got {csr.shape}")
        if csr.nnz and csr.data.min() < 0.0:
            raise ValueError("matrix entries must be nonnegative")
        if not np.all(np.isfinite(csr.data)):
            raise ValueError("matrix entries must be finite")
        row_sums = np.asarray(csr.sum(axis=1)).ravel()
        if stochastic and (csr.shape[0] > 0):
            err = np.abs(row_sums - 1.0).max() if row_sums.size else 0.0
            if err > STOCHASTIC_TOL:
                raise ValueError(
                    f"row sums deviate from 1 by {err:.3e} (> {STOCHASTIC_TOL:.0e}); "
                    "construct with stochastic=False or normalize first"
                )
        row_sums.setflags(write=False)
        self._csr = _freeze(csr)
        self._row_sums = row_sums
        self.stochastic = bool(stochastic)

    # -- construction helpers -------------------------------------------------

    @classmethod
    def from_dense(cls, array, stochastic: bool = True) -> "SparseStochasticMatrix":
        return cls(np.asarray(array, dtype=float), stochastic=stochastic)

    @classmethod
    def from_coo(cls, n, rows, cols, values, stochastic: bool = True):
        coo = sp.coo_matrix((values, (rows, cols)), shape=(n, n))
        return cls(coo, stochastic=stochastic)

    # -- accessors ------------------------------------------------------------

    @property
    def n(self) -> int:
        return self._csr.shape[0]

    @property
    def nnz(self) -> int:
        return self._csr.nnz

    @property
    def csr(self) -> sp.csr_matrix:
        """The canonical CSR storage (buffers are read-only)."""
        return self._csr

    @property
    def row_sums(self) -> np.ndarray:
        return self._row_sums

    def toarray(self) -> np.ndarray:
        return self._csr.toarray()

    def entries(self):
        """Triplets ``(rows, cols, values)`` in canonical row-major order."""
        coo = self._csr.tocoo()
        return coo.row, coo.col, coo.data

    def submatrix(self, indices, stochastic: bool | None = None):
        """Restriction to ``indices`` x ``indices`` (a new canonical matrix)."""
        idx = np.asarray(indices, dtype=np.intp)
        sub = self._csr[idx][:, idx]
        if stochastic is None:
            rs = np.asarray(sub.sum(axis=1)).ravel()
            stochastic = bool(rs.size == 0 or np.abs(rs - 1.0).max() <= STOCHASTIC_TOL)
        return SparseStochasticMatrix(sub, stochastic=stochastic)

    def __repr__(self):
        kind = "stochastic" if self.stochastic else "nonnegative"
        return f"<SparseStochasticMatrix {self.n}x{self.n}, nnz={self.nnz}, {kind}>"

    def __eq__(self, other):
        if not isinstance(other, SparseStochasticMatrix):
            return NotImplemented
        a, b = self._csr, other._csr
        return (
            a.shape == b.shape
            and np.array_equal(a.indptr, b.indptr)
            and np.array_equal(a.indices, b.indices)
            and np.array_equal(a.data, b.data)
        )

    def __hash__(self):
        a = self._csr
        return hash((a.shape, a.indices.tobytes(), a.data.tobytes()))


class ProbabilityVector:
    """Nonnegative vector summing to 1, with its strictly-positive support.

    The support uses the zero threshold ``10 * eps * n``: entries at or below
    it are treated as exact zeros (transient states).
    """

    __slots__ = ("_values", "_support", "_sqrt")

    def __init__(self, values):
        vals = np.array(values, dtype=float).ravel()
        if vals.size == 0:
            raise ValueError("probability vector must not be empty")
        if vals.min() < 0.0:
            raise ValueError("probabilities must be nonnegative")
        total = vals.sum()
        if abs(total - 1.0) > 1e-12:
            raise ValueError(f"probabilities must sum to 1 (got {total!r})")
        vals.setflags(write=False)
        self._values = vals
        support = np.flatnonzero(vals > self.zero_threshold(vals.size))
        support.setflags(write=False)
        self._support = support
        self._sqrt = None

    @staticmethod
    def zero_threshold(n: int) -> float:
        return 10.0 * np.finfo(float).eps * n

    @classmethod
    def uniform(cls, n: int) -> "ProbabilityVector":
        return cls(np.full(n, 1.0 / n))

    @property
    def n(self) -> int:
        return self._values.size

    @property
    def values(self) -> np.ndarray:
        return self._values

    @property
    def support(self) -> np.ndarray:
        """Indices with mass above the zero threshold, ascending."""
        return self._support

    @property
    def sqrt_values(self) -> np.ndarray:
        """Entrywise square root (the similarity scaling weights)."""
        if self._sqrt is None:
            s = np.sqrt(self._values)
            s.setflags(write=False)
            self._sqrt = s
        return self._sqrt

    def is_strictly_positive(self) -> bool:
        return self._support.size == self.n

    def restrict(self, indices) -> "ProbabilityVector":
        """Restriction to ``indices``, renormalized to sum 1."""
        idx = np.asarray(indices, dtype=np.intp)
        sub = self._values[idx]
        total = sub.sum()
        if total <= 0.0:
            raise ValueError("restriction has no probability mass")
        return ProbabilityVector(sub / total)

    def __repr__(self):
        return f"<ProbabilityVector n={self.n}, support={self._support.size}>"


class SparsityPattern:
    """Binary support of a square matrix.

    The ``symmetric`` and ``has_full_diagonal`` flags are computed at
    construction, so when a flag is set the corresponding structural property
    is guaranteed.
    """

    __slots__ = ("_csr", "symmetric", "has_full_diagonal")

    def __init__(self, matrix):
        csr = _canonical_csr(matrix)
        if csr.shape[0] != csr.shape[1]:
            raise DimensionMismatch(f"pattern must be square, got {csr.shape}")
        csr.data[:] = 1.0
        self._csr = _freeze(csr)
        self.symmetric = (csr != csr.T).nnz == 0
        self.has_full_diagonal = bool(np.all(csr.diagonal() > 0))

    @classmethod
    def from_positions(cls, n: int, positions) -> "SparsityPattern":
        positions = list(positions)
        if positions:
            rows, cols = zip(*positions)
        else:
            rows, cols = [], []
        data = np.ones(len(positions))
        return cls(sp.coo_matrix((data, (rows, cols)), shape=(n, n)))

    @classmethod
    def identity(cls, n: int) -> "SparsityPattern":
        return cls(sp.identity(n, format="csr"))

    @property
    def n(self) -> int:
        return self._csr.shape[0]

    @property
    def size(self) -> int:
        """Number of admissible positions."""
        return self._csr.nnz

    @property
    def csr(self) -> sp.csr_matrix:
        return self._csr

    def positions(self):
        """Set of (row, col) pairs."""
        coo = self._csr.tocoo()
        return set(zip(coo.row.tolist(), coo.col.tolist()))

    def row_degrees(self) -> np.ndarray:
        return np.diff(self._csr.indptr)

    def contains(self, i: int, j: int) -> bool:
        return self._csr[i, j] != 0

    def restrict(self, indices) -> "SparsityPattern":
        idx = np.asarray(indices, dtype=np.intp)
        return SparsityPattern(self._csr[idx][:, idx])

    def triu_positions(self):
        """Upper-triangle positions (i <= j) ordered column-major then row."""
        coo = self._csr.tocoo()
        keep = coo.row <= coo.col
        rows, cols = coo.row[keep], coo.col[keep]
        order = np.lexsort((rows, cols))
        return rows[order], cols[order]

    def __eq__(self, other):
        if not isinstance(other, SparsityPattern):
            return NotImplemented
        return self.n == other.n and (self._csr != other._csr).nnz == 0

    def __hash__(self):
        a = self._csr
        return hash((a.shape, a.indices.tobytes(), a.indptr.tobytes()))

    def __repr__(self):
        tags = []
        if self.symmetric:
            tags.append("symmetric")
        if self.has_full_diagonal:
            tags.append("full diagonal")
        tag = ", ".join(tags) if tags else "general"
        return f"<SparsityPattern {self.n}x{self.n}, size={self.size}, {tag}>"


# -- operations ---------------------------------------------------------------


def row_normalize(counts) -> SparseStochasticMatrix:
    """Divide every row of a nonnegative matrix by its sum.

    Parameters
    ----------
    counts : array_like, scipy sparse or SparseStochasticMatrix
        Nonnegative matrix; every row must have at least one positive entry.

    Returns
    -------
    SparseStochasticMatrix
        Stochastic matrix with exactly the support of ``counts``.

    Raises
    ------
    ZeroRow
        If some row is entirely zero.
    """
    if isinstance(counts, SparseStochasticMatrix):
        counts = counts.csr
    csr = _canonical_csr(counts)
    if csr.nnz and csr.data.min() < 0.0:
        raise ValueError("count matrix entries must be nonnegative")
    row_sums = np.asarray(csr.sum(axis=1)).ravel()
    zero_rows = np.flatnonzero(row_sums <= 0.0)
    if zero_rows.size:
        raise ZeroRow(int(zero_rows[0]))
    inv = 1.0 / row_sums
    out = sp.csr_matrix(
        (csr.data * np.repeat(inv, np.diff(csr.indptr)), csr.indices, csr.indptr),
        shape=csr.shape,
    )
    return SparseStochasticMatrix(out, stochastic=True)


def _as_csr(matrix) -> sp.csr_matrix:
    if isinstance(matrix, SparseStochasticMatrix):
        return matrix.csr
    if sp.issparse(matrix):
        return matrix.tocsr()
    return sp.csr_matrix(np.asarray(matrix, dtype=float))


def detailed_balance_residual(P, pi: ProbabilityVector) -> float:
    """Largest violation of the flux-symmetry equations.

    Returns ``max_{i,j} |pi_i P_ij - pi_j P_ji|``, which is zero exactly when
    ``P`` is reversible with respect to ``pi``.
    """
    csr = _as_csr(P)
    if isinstance(pi, ProbabilityVector):
        pi_values = pi.values
    else:
        pi_values = np.asarray(pi, dtype=float).ravel()
    if csr.shape[0] != pi_values.size:
        raise DimensionMismatch(
            f"matrix is {csr.shape[0]}x{csr.shape[1]} but pi has length {pi_values.size}"
        )
    flux = sp.diags(pi_values) @ csr
    asym = (flux - flux.T).tocoo()
    return float(np.abs(asym.data).max()) if asym.nnz else 0.0


def frobenius_distance(A, B) -> float:
    """Frobenius norm of ``A - B`` over the union of supports."""
    a, b = _as_csr(A), _as_csr(B)
    if a.shape != b.shape:
        raise DimensionMismatch(f"shapes differ: {a.shape} vs {b.shape}")
    diff = (a - b).tocoo()
    return float(np.sqrt(np.sum(diff.data**2))) if diff.nnz else 0.0


def symmetrized_pattern(P) -> SparsityPattern:
    """Admissible modification pattern: support of ``P`` union its transpose
    union the full diagonal."""
    csr = _as_csr(P)
    n = csr.shape[0]
    if n != csr.shape[1]:
        raise DimensionMismatch("matrix must be square")
    pattern = sp.csr_matrix(
        (np.ones(csr.nnz), csr.indices, csr.indptr), shape=csr.shape
    )
    return SparsityPattern(pattern + pattern.T + sp.identity(n, format="csr"))


def stochasticity_residual(P) -> float:
    """Infinity norm of the row-sum deviation from 1."""
    csr = _as_csr(P)
    if csr.shape[0] != csr.shape[1]:
        raise DimensionMismatch("matrix must be square")
    row_sums = np.asarray(csr.sum(axis=1)).ravel()
    return float(np.abs(row_sums - 1.0).max()) if row_sums.size else 0.0


def stationarity_residual(P, pi) -> float:
    """Infinity norm of ``pi^T P - pi^T``."""
    csr = _as_csr(P)
    pi_values = pi.values if isinstance(pi, ProbabilityVector) else np.asarray(pi)
    if csr.shape[0] != pi_values.size:
        raise DimensionMismatch("dimensions of P and pi disagree")
    return float(np.abs(pi_values @ csr - pi_values).max())
