"""Assembly of the reduced nearest-reversible quadratic program.

The similarity scaling ``Y = D_s X D_s^{-1}`` with ``s = sqrt(pi)`` turns
"stochastic, reversible w.r.t. pi, pattern-confined" into "symmetric,
nonnegative, fixed eigenvector s, pattern-confined".  Collapsing the symmetric
matrix ``Y`` onto its upper-triangle entries inside the pattern leaves
``y_M = (s_M - n)/2 + n`` free variables and an equality system ``Y s = s``
with only ``n`` rows.  In these variables the objective
``1/2 || D_s^{-1} Y D_s - P ||_F^2`` has a *diagonal* positive-definite
Hessian:

* off-diagonal variable for position (i, j):  ``pi_i/pi_j + pi_j/pi_i``
* diagonal variable for position (i, i):      ``1``

because each variable feeds exactly the two vector slots (i,j) and (j,i) of
the scaled residual with weights ``s_j/s_i`` and ``s_i/s_j``.  The closed form
is validated against a dense Kronecker-product oracle in the test suite.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass
from typing import Callable

import numpy as np
import scipy.sparse as sp

from .exceptions import (
    DimensionMismatch,
    LengthMismatch,
    MissingDiagonal,
    NegativeEntry,
    NonPositivePi,
    PatternNotSymmetric,
)
from .sparse_core import ProbabilityVector, SparseStochasticMatrix, SparsityPattern

__all__ = [
    "IndexMaps",
    "ReducedQP",
    "build_index_maps",
    "expand_symmetric",
    "apply_reduced_operator",
    "build_reduced_qp",
    "unscale_solution",
    "weighting_vector",
]

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class IndexMaps:
    """Bijection between upper-triangle pattern positions and variable slots.

    ``upper_rows[k], upper_cols[k]`` is the position of variable ``k``;
    positions are ordered column-major then row, so the layout is
    deterministic.  ``y_m`` is the variable count ``(s_M - n)/2 + n``.
    """

    n: int
    upper_rows: np.ndarray
    upper_cols: np.ndarray

    def __post_init__(self):
        self.upper_rows.setflags(write=False)
        self.upper_cols.setflags(write=False)

    @property
    def y_m(self) -> int:
        return self.upper_rows.size

    @property
    def diagonal_mask(self) -> np.ndarray:
        return self.upper_rows == self.upper_cols

    @property
    def k_of(self) -> dict:
        """Map from position (i, j), i <= j, to variable index."""
        return {
            (int(i), int(j)): k
            for k, (i, j) in enumerate(zip(self.upper_rows, self.upper_cols))
        }

    def r_of(self, i: int, j: int) -> int:
        """Column-major vectorization slot of position (i, j)."""
        return j * self.n + i

    def upper_positions(self):
        return list(zip(self.upper_rows.tolist(), self.upper_cols.tolist()))


def build_index_maps(pattern: SparsityPattern) -> IndexMaps:
    """Variable indexing for the upper triangle of a symmetric pattern.

    Raises
    ------
    PatternNotSymmetric
        If the pattern is not symmetric.
    MissingDiagonal
        If some diagonal position is missing.
    """
    if not pattern.symmetric:
        raise PatternNotSymmetric("reduction requires a symmetric pattern")
    if not pattern.has_full_diagonal:
        raise MissingDiagonal("reduction requires every diagonal position")
    rows, cols = pattern.triu_positions()
    expected = (pattern.size - pattern.n) // 2 + pattern.n
    assert rows.size == expected
    return IndexMaps(n=pattern.n, upper_rows=rows, upper_cols=cols)


def weighting_vector(maps: IndexMaps) -> np.ndarray:
    """Diagonal of the normal product of the symmetric-expansion operator:
    1 for off-diagonal variables, 1/2 for diagonal ones.

    Exposed for the algebraic identity test against the dense oracle; the
    reduced program itself never needs it.
    """
    return np.where(maps.diagonal_mask, 0.5, 1.0)


def expand_symmetric(y: np.ndarray, maps: IndexMaps) -> sp.csr_matrix:
    """Symmetric matrix with upper-triangle entries ``y`` inside the pattern."""
    y = np.asarray(y, dtype=float).ravel()
    if y.size != maps.y_m:
        raise LengthMismatch(f"expected length {maps.y_m}, got {y.size}")
    off = ~maps.diagonal_mask
    rows = np.concatenate([maps.upper_rows, maps.upper_cols[off]])
    cols = np.concatenate([maps.upper_cols, maps.upper_rows[off]])
    vals = np.concatenate([y, y[off]])
    out = sp.coo_matrix((vals, (rows, cols)), shape=(maps.n, maps.n)).tocsr()
    out.eliminate_zeros()
    out.sort_indices()
    return out


def _check_pi(pi: ProbabilityVector, n: int):
    if pi.n != n:
        raise DimensionMismatch("dimensions of pi and pattern disagree")
    if not pi.is_strictly_positive():
        missing = np.setdiff1d(np.arange(n), pi.support)
        raise NonPositivePi(int(missing[0]))


def apply_reduced_operator(
    y: np.ndarray, maps: IndexMaps, pi_hat: np.ndarray
) -> np.ndarray:
    """Scaled symmetric expansion as a length ``n^2`` column-major vector.

    Computes ``vec(D_s^{-1} Y D_s)`` for ``Y = expand_symmetric(y)`` without
    ever materializing an ``n^2 x n^2`` operator; entry ``(i, j)`` of the
    matrix lands in slot ``j * n + i`` and is scaled by ``s_j / s_i``.
    """
    pi_hat = np.asarray(pi_hat, dtype=float).ravel()
    if pi_hat.size != maps.n:
        raise DimensionMismatch("pi_hat has wrong length")
    if np.any(pi_hat <= 0.0):
        raise NonPositivePi(int(np.argmin(pi_hat)))
    Y = expand_symmetric(y, maps).tocoo()
    out = np.zeros(maps.n * maps.n)
    out[Y.col * maps.n + Y.row] = Y.data * pi_hat[Y.col] / pi_hat[Y.row]
    return out


@dataclass(frozen=True)
class ReducedQP:
    """Standard-form data of the reduced program.

    minimize   1/2 y^T Q y + c^T y
    subject to A_eq y = b_eq,  y >= 0

    ``hessian_diag`` is the diagonal of the (diagonal) Hessian; ``constant``
    is ``1/2 ||P||_F^2``, so the full objective value
    ``1/2 y^T Q y + c^T y + constant`` equals ``1/2 ||X - P||_F^2`` for the
    matrix ``X`` recovered from ``y`` by :func:`unscale_solution`.
    """

    maps: IndexMaps
    hessian_diag: np.ndarray
    linear: np.ndarray
    a_eq: sp.csr_matrix
    b_eq: np.ndarray
    pi_hat: np.ndarray
    constant: float

    def __post_init__(self):
        for arr in (self.hessian_diag, self.linear, self.b_eq, self.pi_hat):
            arr.setflags(write=False)
        for buf in (self.a_eq.data, self.a_eq.indices, self.a_eq.indptr):
            buf.setflags(write=False)

    @property
    def n(self) -> int:
        return self.maps.n

    @property
    def y_m(self) -> int:
        return self.maps.y_m

    @property
    def hessian(self) -> sp.csr_matrix:
        return sp.diags(self.hessian_diag).tocsr()

    def objective(self, y: np.ndarray, include_constant: bool = True) -> float:
        y = np.asarray(y, dtype=float).ravel()
        value = 0.5 * float(y @ (self.hessian_diag * y)) + float(self.linear @ y)
        return value + (self.constant if include_constant else 0.0)

    def to_debug_dict(self) -> dict:
        """JSON-ready dump (dimensions plus triplets) for external solvers."""
        q = self.hessian.tocoo()
        a = self.a_eq.tocoo()
        return {
            "schema": "revmarkov-reduced-qp/1",
            "n": int(self.n),
            "y_m": int(self.y_m),
            "hessian": {
                "rows": q.row.tolist(),
                "cols": q.col.tolist(),
                "values": q.data.tolist(),
            },
            "linear": self.linear.tolist(),
            "a_eq": {
                "rows": a.row.tolist(),
                "cols": a.col.tolist(),
                "values": a.data.tolist(),
            },
            "b_eq": self.b_eq.tolist(),
            "constant": float(self.constant),
            "upper_rows": self.maps.upper_rows.tolist(),
            "upper_cols": self.maps.upper_cols.tolist(),
        }

    def dump_debug_json(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(self.to_debug_dict(), fh)


def build_reduced_qp(
    P: SparseStochasticMatrix, pi: ProbabilityVector, pattern: SparsityPattern
) -> ReducedQP:
    """Assemble the reduced program for one chain, one target distribution,
    and one symmetric full-diagonal pattern.

    ``P`` entries outside the pattern only shift the objective by a constant
    (they can never be matched), and that constant is part of ``constant``.
    """
    maps = build_index_maps(pattern)
    if P.n != pattern.n:
        raise DimensionMismatch("dimensions of P and pattern disagree")
    _check_pi(pi, pattern.n)

    pi_vals = pi.values
    pi_hat = pi.sqrt_values.copy()
    i, j = maps.upper_rows, maps.upper_cols
    diag = maps.diagonal_mask

    ratio = pi_vals[i] / pi_vals[j]
    hessian_diag = np.where(diag, 1.0, ratio + 1.0 / ratio)

    csr = P.csr
    p_up = np.asarray(csr[i, j]).ravel()
    p_down = np.asarray(csr[j, i]).ravel()
    scale_up = pi_hat[j] / pi_hat[i]
    linear = np.where(diag, -p_up, -(p_up * scale_up + p_down / scale_up))

    off = ~diag
    rows = np.concatenate([i, j[off]])
    cols = np.concatenate([np.arange(maps.y_m), np.flatnonzero(off)])
    vals = np.concatenate([np.where(diag, pi_hat[i], pi_hat[j]), pi_hat[i[off]]])
    a_eq = sp.coo_matrix((vals, (rows, cols)), shape=(maps.n, maps.y_m)).tocsr()

    constant = 0.5 * float(np.sum(csr.data**2))
    return ReducedQP(
        maps=maps,
        hessian_diag=hessian_diag,
        linear=linear,
        a_eq=a_eq,
        b_eq=pi_hat.copy(),
        pi_hat=pi_hat,
        constant=constant,
    )


def unscale_solution(
    y: np.ndarray,
    maps: IndexMaps,
    pi_hat: np.ndarray,
    negative_tolerance: float = 1e-12,
    stochasticity_tolerance: float = 1e-12,
    log: Callable[[str], None] | None = None,
) -> SparseStochasticMatrix:
    """Map a reduced solution back to a stochastic matrix.

    Entries in ``[-negative_tolerance, 0)`` are clamped to zero; anything more
    negative raises :class:`NegativeEntry`.  Rows are renormalized only when
    the row-sum deviation exceeds ``stochasticity_tolerance``, and that event
    is logged because it means the solver left visible slack.
    """
    y = np.asarray(y, dtype=float).ravel()
    if y.size != maps.y_m:
        raise LengthMismatch(f"expected length {maps.y_m}, got {y.size}")
    worst = int(np.argmin(y)) if y.size else 0
    if y.size and y[worst] < -negative_tolerance:
        raise NegativeEntry(worst, float(y[worst]))
    y = np.maximum(y, 0.0)

    pi_hat = np.asarray(pi_hat, dtype=float).ravel()
    Y = expand_symmetric(y, maps).tocoo()
    r_vals = Y.data * pi_hat[Y.col] / pi_hat[Y.row]
    R = sp.coo_matrix((r_vals, (Y.row, Y.col)), shape=(maps.n, maps.n)).tocsr()

    row_sums = np.asarray(R.sum(axis=1)).ravel()
    deviation = float(np.abs(row_sums - 1.0).max()) if row_sums.size else 0.0
    if deviation > stochasticity_tolerance:
        message = (
            f"renormalizing rows: row-sum deviation {deviation:.3e} exceeds "
            f"{stochasticity_tolerance:.0e}"
        )
        (log or logger.warning)(message)
        R = sp.diags(1.0 / row_sums) @ R
    return SparseStochasticMatrix(R, stochastic=True)
