"""Solvers for the reduced strongly convex program

    minimize   1/2 y^T Q y + c^T y
    subject to A_eq y = b_eq,  y >= 0

with diagonal positive-definite ``Q``.  The reference variant is a primal-dual
interior-point method with a Mehrotra predictor-corrector; because ``Q`` is
diagonal, each Newton step collapses to one n-by-n normal-equations solve.  A
projected-gradient variant (exact projection onto the polyhedron via Dykstra
alternation) is provided as an independent cross-check, and
:func:`oracle_solve` enumerates every active set for small instances.

Since the objective is strongly convex the minimizer is unique, so all three
routes must agree; the test suite holds them to that.
"""

from __future__ import annotations

import subprocess
import time
import warnings
from dataclasses import dataclass
from enum import Enum
from typing import NamedTuple, Optional

import numpy as np
import scipy.linalg
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .exceptions import (
    Infeasible,
    MaxIterations,
    NumericalBreakdown,
    TooLarge,
)
from .qp_build import ReducedQP
from .reversibilize import AcceptanceRule, proposal_from_pattern, reversibilize
from .sparse_core import ProbabilityVector, SparsityPattern

__all__ = [
    "SolverVariant",
    "SolverOptions",
    "KKTResiduals",
    "SolverResult",
    "solve_qp",
    "feasible_start",
    "kkt_residuals",
    "oracle_solve",
    "solve_with_external",
]

#: Instances at most this dense are factored with LAPACK instead of SuperLU.
_DENSE_LIMIT = 600

#: Active-set enumeration cap for the brute-force oracle.
ORACLE_LIMIT = 16


class SolverVariant(Enum):
    INTERIOR_POINT = "interior-point"
    PROJECTED_GRADIENT = "projected-gradient"


@dataclass(frozen=True)
class SolverOptions:
    """Solver controls.

    ``warm_start=True`` starts from the always-available feasible point built
    by Metropolis-Hastings adjustment of the uniform proposal on the pattern;
    ``False`` starts from the all-ones vector.  ``polish=True`` refines the
    final iterate by a direct solve on the identified active set, which pushes
    the residuals to machine precision.
    """

    kkt_tolerance: float = 1e-10
    max_iterations: int = 200
    variant: SolverVariant = SolverVariant.INTERIOR_POINT
    polish: bool = True
    warm_start: bool = True

    def __post_init__(self):
        if self.kkt_tolerance <= 0.0:
            raise ValueError("kkt_tolerance must be positive")
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be at least 1")


class KKTResiduals(NamedTuple):
    """(stationarity, primal equality, primal nonnegativity, complementarity).

    Complementarity is measured as ``||min(y, z)||_inf``, which also exposes
    negative multipliers.
    """

    stationarity: float
    primal_eq: float
    primal_ineq: float
    complementarity: float

    @property
    def worst(self) -> float:
        return max(self)


@dataclass(frozen=True)
class SolverResult:
    y: np.ndarray
    objective: float
    iterations: int
    kkt_residuals: KKTResiduals
    wall_time: float
    objective_trace: tuple = ()  # accepted-iterate objectives (projected gradient)

    def __post_init__(self):
        self.y.setflags(write=False)


# -- shared linear algebra ----------------------------------------------------


class _NormalSolver:
    """Factors ``A diag(w) A^T (+ reg I)`` and solves against it.

    Dense Cholesky for small ``n``, SuperLU beyond.  On factorization failure
    a diagonal regularization is escalated from 1e-14 to 1e-6 before giving
    up with :class:`NumericalBreakdown`.
    """

    def __init__(self, a_eq: sp.csr_matrix):
        self.a = a_eq.tocsr()
        self.at = self.a.T.tocsr()
        self.n = a_eq.shape[0]
        self.dense = self.n <= _DENSE_LIMIT
        self._factor = None

    def refactor(self, w: np.ndarray):
        S = (self.a.multiply(w) @ self.at).tocsc()
        reg = 0.0
        while True:
            try:
                if self.dense:
                    M = S.toarray()
                    if reg:
                        M[np.diag_indices_from(M)] += reg
                    self._factor = scipy.linalg.cho_factor(M, check_finite=False)
                    self._solve = lambda rhs: scipy.linalg.cho_solve(
                        self._factor, rhs, check_finite=False
                    )
                else:
                    M = S + reg * sp.identity(self.n, format="csc") if reg else S
                    lu = spla.splu(M)
                    self._solve = lu.solve
                return
            except (scipy.linalg.LinAlgError, RuntimeError) as err:
                reg = 1e-14 if reg == 0.0 else reg * 100.0
                if reg > 1e-6:
                    raise NumericalBreakdown(
                        f"normal equations are singular beyond recovery: {err}"
                    ) from err

    def solve(self, rhs: np.ndarray) -> np.ndarray:
        return self._solve(rhs)


def kkt_residuals(
    qp: ReducedQP,
    y: np.ndarray,
    lam: Optional[np.ndarray] = None,
    z: Optional[np.ndarray] = None,
) -> KKTResiduals:
    """KKT residual tuple at ``y`` (multipliers estimated by least squares
    when not supplied)."""
    y = np.asarray(y, dtype=float).ravel()
    g = qp.hessian_diag * y + qp.linear
    if lam is None:
        a = qp.a_eq
        S = (a @ a.T).toarray()
        lam = scipy.linalg.solve(S, a @ g, assume_a="pos")
    if z is None:
        z = g - qp.a_eq.T @ lam
        stationarity = 0.0
    else:
        stationarity = float(np.abs(g - qp.a_eq.T @ lam - z).max())
    primal_eq = float(np.abs(qp.a_eq @ y - qp.b_eq).max())
    primal_ineq = float(max(0.0, -y.min())) if y.size else 0.0
    complementarity = float(np.abs(np.minimum(y, z)).max()) if y.size else 0.0
    return KKTResiduals(stationarity, primal_eq, primal_ineq, complementarity)


def feasible_start(qp: ReducedQP) -> np.ndarray:
    """Strictly positive feasible point: the Metropolis-Hastings adjustment of
    the uniform proposal on the pattern, scaled into the symmetric variables.

    Exists for every symmetric full-diagonal pattern and strictly positive
    target, which is exactly what makes the program feasible in the first
    place.
    """
    maps = qp.maps
    n = maps.n
    mirror_rows = np.concatenate([maps.upper_rows, maps.upper_cols])
    mirror_cols = np.concatenate([maps.upper_cols, maps.upper_rows])
    pattern = SparsityPattern(
        sp.coo_matrix((np.ones(mirror_rows.size), (mirror_rows, mirror_cols)), shape=(n, n))
    )
    pi_vals = qp.pi_hat**2
    pi = ProbabilityVector(pi_vals / pi_vals.sum())
    T = reversibilize(proposal_from_pattern(pattern), pi, AcceptanceRule.METROPOLIS_HASTINGS)
    i, j = maps.upper_rows, maps.upper_cols
    t_up = np.asarray(T.csr[i, j]).ravel()
    y0 = np.where(maps.diagonal_mask, t_up, t_up * qp.pi_hat[i] / qp.pi_hat[j])
    return y0


# -- polishing ----------------------------------------------------------------


def _polish(qp: ReducedQP, y: np.ndarray, z: np.ndarray):
    """Direct solve on the active set identified by (y, z).

    Returns ``(y, lam, z)`` at machine precision or None when the identified
    set is unusable (wrong signs or a state left without free variables).
    """
    q, c, a, b = qp.hessian_diag, qp.linear, qp.a_eq, qp.b_eq
    free = y > z
    for _ in range(10):
        if not free.any():
            return None
        a_f = a[:, free]
        if (np.diff(a_f.indptr) == 0).any():
            return None
        w = 1.0 / q[free]
        S = (a_f.multiply(w) @ a_f.T).toarray()
        try:
            factor = scipy.linalg.cho_factor(S, check_finite=False)
        except scipy.linalg.LinAlgError:
            return None
        lam = scipy.linalg.cho_solve(factor, b + a_f @ (w * c[free]), check_finite=False)
        y_f = w * (a_f.T @ lam - c[free])
        for _ in range(2):  # iterative refinement on the equality residual
            r = b - a_f @ y_f
            y_f += w * (a_f.T @ scipy.linalg.cho_solve(factor, r, check_finite=False))

        if y_f.min() < -1e-11:
            free = free.copy()
            free[np.flatnonzero(free)[y_f < -1e-11]] = False
            continue
        y_new = np.zeros_like(y)
        y_new[free] = np.maximum(y_f, 0.0)
        z_new = q * y_new + c - a.T @ lam
        z_new[free] = 0.0
        if z_new.min() < -np.sqrt(np.finfo(float).eps):
            released = z_new < -np.sqrt(np.finfo(float).eps)
            free = free | released
            continue
        return y_new, lam, np.maximum(z_new, 0.0)
    return None


# -- interior point -----------------------------------------------------------


def _step_length(v: np.ndarray, dv: np.ndarray, fraction: float = 0.995) -> float:
    neg = dv < 0.0
    if not neg.any():
        return 1.0
    return float(min(1.0, fraction * np.min(-v[neg] / dv[neg])))


def _solve_interior_point(qp: ReducedQP, opts: SolverOptions):
    q, c, a, b = qp.hessian_diag, qp.linear, qp.a_eq, qp.b_eq
    at = a.T.tocsr()
    m = qp.y_m

    y = feasible_start(qp) if opts.warm_start else np.ones(m)
    y = np.maximum(y, 1e-8)
    z = np.ones(m)
    lam = np.zeros(qp.n)

    normal = _NormalSolver(a)
    best = None

    def residuals(y, lam, z):
        r_d = q * y + c - at @ lam - z
        r_p = a @ y - b
        comp = np.abs(np.minimum(y, z)).max()
        return r_d, r_p, float(comp)

    iteration = 0
    for iteration in range(1, opts.max_iterations + 1):
        r_d, r_p, comp = residuals(y, lam, z)
        worst = max(np.abs(r_d).max(), np.abs(r_p).max(), comp)
        if best is None or worst < best[0]:
            best = (worst, y.copy(), lam.copy(), z.copy(), iteration - 1)
        if worst <= opts.kkt_tolerance:
            break

        mu = float(y @ z) / m
        d = q + z / y
        normal.refactor(1.0 / d)

        def newton(r_c):
            g = -r_d - r_c / y
            dlam = normal.solve(-r_p - a @ (g / d))
            dy = (at @ dlam + g) / d
            dz = -(r_c + z * dy) / y
            return dy, dlam, dz

        # predictor
        dy_aff, dlam_aff, dz_aff = newton(y * z)
        alpha_p = _step_length(y, dy_aff, 1.0)
        alpha_d = _step_length(z, dz_aff, 1.0)
        mu_aff = float((y + alpha_p * dy_aff) @ (z + alpha_d * dz_aff)) / m
        sigma = min(1.0, max(0.0, (mu_aff / mu) ** 3)) if mu > 0 else 0.0

        # corrector
        dy, dlam, dz = newton(y * z + dy_aff * dz_aff - sigma * mu)
        alpha_p = _step_length(y, dy)
        alpha_d = _step_length(z, dz)
        y = y + alpha_p * dy
        lam = lam + alpha_d * dlam
        z = z + alpha_d * dz

    r_d, r_p, comp = residuals(y, lam, z)
    worst = max(np.abs(r_d).max(), np.abs(r_p).max(), comp)
    if best is None or worst < best[0]:
        best = (worst, y, lam, z, iteration)
    return (*best, ())


def _dykstra(project_affine, v, tol=1e-14, max_rounds=5000):
    """Projection onto ``{x : A x = b, x >= 0}`` by Dykstra alternation.

    Works in any inner product for which both individual projections are
    supplied/valid; here the affine projection is passed in pre-metricized.
    """
    x = v.copy()
    p = np.zeros_like(v)
    s = np.zeros_like(v)
    for _ in range(max_rounds):
        u = project_affine(x + p)
        p = x + p - u
        x_new = np.maximum(u + s, 0.0)
        s = u + s - x_new
        if np.abs(x_new - x).max() <= tol:
            return x_new
        x = x_new
    return x


def _solve_projected_gradient(qp: ReducedQP, opts: SolverOptions):
    """Projected gradient in the metric of the diagonal Hessian.

    With the metric ``<u, v> = u^T Q v`` the objective has curvature constant
    exactly 1, so the unit step is always admissible and the scheme reduces to
    repeatedly projecting the unconstrained minimizer onto the polyhedron
    (computed by Dykstra alternation, whose affine projection uses the same
    metric).  The objective decreases monotonically along accepted steps.
    """
    q, c, a, b = qp.hessian_diag, qp.linear, qp.a_eq, qp.b_eq
    at = a.T.tocsr()
    m = qp.y_m

    w = 1.0 / q  # inverse metric weights
    gram = (a.multiply(w) @ at).toarray()
    factor = scipy.linalg.cho_factor(gram, check_finite=False)
    fsolve = lambda rhs: scipy.linalg.cho_solve(factor, rhs, check_finite=False)

    def project_affine(v):
        # metric projection onto {A x = b}
        return v + w * (at @ fsolve(b - a @ v))

    y = feasible_start(qp) if opts.warm_start else _dykstra(project_affine, np.ones(m))

    def quad(v):
        return 0.5 * float(v @ (q * v)) + float(c @ v)

    def kkt_tuple(v):
        g = q * v + c
        lam = fsolve(a @ (w * g))
        z = g - at @ lam
        res = KKTResiduals(
            0.0,
            float(np.abs(a @ v - b).max()),
            float(max(0.0, -v.min())),
            float(np.abs(np.minimum(v, z)).max()),
        )
        return res, lam, z

    obj = quad(y)
    trace = [obj]
    best = None
    step = 1.0
    stalled = 0
    iteration = 0
    for iteration in range(1, opts.max_iterations + 1):
        res, lam, z = kkt_tuple(y)
        improved = best is None or res.worst < best[0]
        meaningfully = best is None or res.worst < best[0] * (1.0 - 1e-3)
        if improved:
            best = (res.worst, y.copy(), lam, z, iteration - 1)
        stalled = 0 if meaningfully else stalled + 1
        if res.worst <= opts.kkt_tolerance or stalled >= 30:
            break  # done, or at the accuracy floor of the inner projections

        # monotone step: backtrack on the proximal sufficient-decrease test
        g = q * y + c
        accepted = False
        for _ in range(40):
            cand = _dykstra(project_affine, y - step * (w * g))
            delta = cand - y
            bound = obj + g @ delta + float(delta @ (q * delta)) / (2.0 * step)
            if quad(cand) <= bound + 1e-15:
                accepted = True
                break
            step *= 0.5
        if not accepted:
            break
        y, obj = cand, quad(cand)
        trace.append(obj)

    res, lam, z = kkt_tuple(y)
    if best is None or res.worst < best[0]:
        best = (res.worst, y, lam, z, iteration)
    return (*best, tuple(trace))


def solve_qp(qp: ReducedQP, opts: SolverOptions | None = None) -> SolverResult:
    """Solve the reduced program to the requested KKT tolerance.

    Both variants finish with an active-set polish (unless disabled), which
    re-solves the equality-constrained problem on the identified support and
    typically leaves residuals at machine precision.  The strongly convex
    objective has a unique minimizer, so the variants agree up to tolerance.

    Raises
    ------
    MaxIterations
        If the tolerance is not met; the exception carries the best iterate.
    NumericalBreakdown
        If the Newton systems become singular beyond recovery.
    """
    opts = opts or SolverOptions()
    start = time.perf_counter()
    if opts.variant is SolverVariant.INTERIOR_POINT:
        worst, y, lam, z, iterations, trace = _solve_interior_point(qp, opts)
    else:
        worst, y, lam, z, iterations, trace = _solve_projected_gradient(qp, opts)

    residuals = kkt_residuals(qp, y, lam, z)
    if opts.polish:
        polished = _polish(qp, y, np.maximum(z, 0.0))
        if polished is not None:
            res_pol = kkt_residuals(qp, polished[0], polished[1], polished[2])
            if res_pol.worst <= residuals.worst:
                y, lam, z = polished
                residuals = res_pol

    result = SolverResult(
        y=y,
        objective=qp.objective(y),
        iterations=iterations,
        kkt_residuals=residuals,
        wall_time=time.perf_counter() - start,
        objective_trace=trace,
    )
    if residuals.worst > opts.kkt_tolerance:
        raise MaxIterations(result)
    return result


# -- brute-force oracle --------------------------------------------------------


def oracle_solve(qp: ReducedQP, enumeration_limit: int = ORACLE_LIMIT) -> np.ndarray:
    """Global minimizer by exhaustive active-set enumeration.

    Every subset of the nonnegativity constraints is pinned at zero in turn;
    the remaining equality-constrained problem is solved by a dense
    factorization of the bordered system (least-norm on singular systems), and
    candidates violating primal or dual sign conditions are discarded.  The
    least objective among survivors is the unique optimum, exact up to dense
    roundoff, which makes this an independent check of the iterative solvers.

    Raises
    ------
    TooLarge
        If ``y_m`` exceeds ``enumeration_limit`` (the loop is ``2^y_m``).
    Infeasible
        If no active set produces a feasible candidate; cannot happen for a
        full-diagonal pattern with strictly positive target.
    """
    m = qp.y_m
    if m > enumeration_limit:
        raise TooLarge(m, enumeration_limit)
    q = np.diag(qp.hessian_diag)
    a = qp.a_eq.toarray()
    b, c = qp.b_eq, qp.linear
    n = qp.n

    bit_table = ((np.arange(1 << m)[:, None] >> np.arange(m)) & 1).astype(bool)
    best_y, best_val = None, np.inf
    with warnings.catch_warnings():
        # singular active sets are probed on purpose; lstsq handles them
        warnings.simplefilter("ignore", scipy.linalg.LinAlgWarning)
        for mask in range(1 << m):
            active = bit_table[mask]
            free = ~active
            f = int(free.sum())
            if f == 0:
                continue
            kkt = np.zeros((f + n, f + n))
            kkt[:f, :f] = q[np.ix_(free, free)]
            kkt[:f, f:] = a[:, free].T
            kkt[f:, :f] = a[:, free]
            rhs = np.concatenate([-c[free], b])
            try:
                sol = scipy.linalg.solve(kkt, rhs, assume_a="sym")
                if not np.all(np.isfinite(sol)):
                    raise scipy.linalg.LinAlgError
            except scipy.linalg.LinAlgError:
                sol, *_ = np.linalg.lstsq(kkt, rhs, rcond=None)
            y_f, lam = sol[:f], -sol[f:]
            if np.abs(a[:, free] @ y_f - b).max() > 1e-8:
                continue
            if y_f.size and y_f.min() < -1e-9:
                continue
            y = np.zeros(m)
            y[free] = y_f
            z = qp.hessian_diag * y + c - a.T @ lam
            if active.any() and z[active].min() < -1e-9:
                continue
            value = qp.objective(y, include_constant=False)
            if value < best_val - 1e-15:
                best_val, best_y = value, np.maximum(y, 0.0)
    if best_y is None:
        raise Infeasible("no active set produced a feasible candidate")
    return best_y


# -- external solver bridge (disabled unless explicitly invoked) ---------------


def solve_with_external(qp: ReducedQP, command: list, workdir) -> SolverResult:
    """Cross-validate against a third-party solver.

    Writes the JSON debug dump of ``qp`` to ``workdir/qp.json``, appends that
    path and an output path to ``command``, runs it, and reads the solution
    vector back (one value per line).  Residuals are recomputed here, so a
    misbehaving external solver is caught immediately.
    """
    import pathlib

    workdir = pathlib.Path(workdir)
    problem = workdir / "qp.json"
    answer = workdir / "solution.txt"
    qp.dump_debug_json(problem)
    start = time.perf_counter()
    subprocess.run([*command, str(problem), str(answer)], check=True)
    y = np.loadtxt(answer, dtype=float, ndmin=1)
    residuals = kkt_residuals(qp, y)
    return SolverResult(
        y=y,
        objective=qp.objective(y),
        iterations=0,
        kkt_residuals=residuals,
        wall_time=time.perf_counter() - start,
    )
