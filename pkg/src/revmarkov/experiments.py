"""Desk-scale experiment drivers: random sparse chain generation, overdamped
Langevin simulation with count-matrix estimation, and the benchmark loop.

Randomness comes from counter-based Philox streams so every artifact is a
pure function of ``(seed, case_index)``:

* benchmark case ``i``, attempt ``a``: key ``(seed, a * 2**32 + i)``
* Langevin trajectories:              key ``(seed, 2**63)``

Streams never overlap and are reproducible across platforms (trajectory
values additionally depend on the platform's libm rounding of sin/cos).
"""

from __future__ import annotations

import csv
import json
import math
import time
from dataclasses import dataclass
from typing import Optional

import numpy as np
import scipy.sparse as sp

from .chain_analysis import strongly_connected_components
from .exceptions import DegenerateInstance, EmptyTrajectory
from .pipeline import PipelineOptions, nearest_sparse_reversible
from .sparse_core import SparseStochasticMatrix, row_normalize

__all__ = [
    "BenchmarkConfig",
    "LangevinConfig",
    "gen_random_chain",
    "langevin_trajectory",
    "count_matrix",
    "run_benchmark",
    "torsion_potential",
    "torsion_potential_gradient",
]

TWO_PI = 2.0 * math.pi

#: Langevin noise is drawn in blocks of this many steps (part of the stream
#: contract: changing it would not change the values, only the batching).
_NOISE_BLOCK = 1 << 20

_LANGEVIN_STREAM = np.uint64(1) << np.uint64(63)


@dataclass(frozen=True)
class BenchmarkConfig:
    """Random sparse chain ensemble: sizes, sparsity, and seed."""

    num_cases: int = 100
    n_min: int = 100
    n_max: int = 300
    alpha: float = 5.0
    seed: int = 20250807

    def __post_init__(self):
        if self.n_min > self.n_max:
            raise ValueError("n_min must not exceed n_max")
        if self.alpha < 1.0:
            raise ValueError("alpha must be at least 1")


_SEED_MASK = (1 << 64) - 1


def _case_rng(seed: int, case_index: int, attempt: int = 0) -> np.random.Generator:
    stream = np.uint64(attempt) * np.uint64(2**32) + np.uint64(case_index)
    key = np.array([np.uint64(seed & _SEED_MASK), stream], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key))


def gen_random_chain(cfg: BenchmarkConfig, case_index: int, attempt: int = 0):
    """One random sparse irreducible chain.

    Draws ``n`` uniformly from ``[n_min, n_max]``, places ``floor(alpha n)``
    uniform(0,1) values at uniform positions (duplicates collapse, so the
    count is an upper bound), restricts to the largest strongly connected
    component of the support, and row-normalizes.

    Raises
    ------
    DegenerateInstance
        If the largest component has fewer than two states; retry with the
        next attempt substream.
    """
    rng = _case_rng(cfg.seed, case_index, attempt)
    n = int(rng.integers(cfg.n_min, cfg.n_max + 1))
    nnz = int(cfg.alpha * n)
    flat = np.unique(rng.integers(0, n * n, size=nnz))
    values = rng.random(flat.size)
    raw = sp.coo_matrix(
        (values, (flat // n, flat % n)), shape=(n, n)
    ).tocsr()

    components = strongly_connected_components(raw)
    sizes = [len(c) for c in components]
    largest = max(sizes)
    if largest < 2:
        raise DegenerateInstance(
            f"largest strongly connected component has {largest} state(s)"
        )
    members = min(
        (c for c in components if len(c) == largest), key=lambda c: int(c[0])
    )
    return row_normalize(raw[members][:, members])


@dataclass(frozen=True)
class LangevinConfig:
    """Overdamped Langevin run on a periodic torsion potential.

    The potential is ``U(x) = a + b cos x + c cos^2 x + d cos^3 x`` on
    ``[0, 2 pi)``; the defaults are the butane torsion coefficients.  ``x0``
    is the start angle (the deepest well by default); set ``sigma = 0`` for
    plain gradient descent.
    """

    a: float = 2.0567
    b: float = -4.0567
    c: float = 0.3133
    d: float = 6.4267
    dt: float = 1e-3
    sigma: float = 1.0
    steps: int = 50_000_000
    bins: int = 30
    seed: int = 20250807
    x0: float = math.pi

    def __post_init__(self):
        if self.dt <= 0.0:
            raise ValueError("dt must be positive")
        if self.bins < 2:
            raise ValueError("bins must be at least 2")
        if self.steps < 1:
            raise ValueError("steps must be at least 1")

    @property
    def coefficients(self):
        return (self.a, self.b, self.c, self.d)

    @property
    def domain(self):
        """State space interval; fixed by the period of the potential."""
        return (0.0, TWO_PI)


def torsion_potential(x, coefficients) -> np.ndarray:
    """``U(x) = a + b cos x + c cos^2 x + d cos^3 x`` (vectorized)."""
    a, b, c, d = coefficients
    cx = np.cos(x)
    return a + b * cx + c * cx**2 + d * cx**3


def torsion_potential_gradient(x, coefficients) -> np.ndarray:
    a, b, c, d = coefficients
    cx = np.cos(x)
    return -np.sin(x) * (b + 2.0 * c * cx + 3.0 * d * cx**2)


def _walk_chunk(x, noise, b1, c2, d3, dt, amp, bin_scale, nbins, out, offset):
    # Euler-Maruyama steps; drift is -dU/dx = sin(x) (b + 2c cos x + 3d cos^2 x)
    for t in range(noise.shape[0]):
        s = math.sin(x)
        co = math.cos(x)
        x = x + (s * (b1 + c2 * co + d3 * co * co)) * dt + amp * noise[t]
        x = x % TWO_PI
        k = int(x * bin_scale)
        if k >= nbins:
            k = nbins - 1
        out[offset + t] = k
    return x


_compiled_walk = None


def _get_walk_kernel():
    """JIT-compile the step loop when numba is available; the pure-Python
    fallback runs the identical arithmetic, only slower."""
    global _compiled_walk
    if _compiled_walk is None:
        try:
            from numba import njit

            _compiled_walk = njit(cache=True)(_walk_chunk)
        except ImportError:  # pragma: no cover - numba is a declared dependency
            _compiled_walk = _walk_chunk
    return _compiled_walk


def langevin_trajectory(cfg: LangevinConfig) -> np.ndarray:
    """Bin indices visited by one Euler-Maruyama trajectory.

    Positions are wrapped into ``[0, 2 pi)`` (the potential is periodic) and
    mapped to ``floor(x * bins / 2 pi)``.  The result has ``steps + 1``
    entries including the start.
    """
    kernel = _get_walk_kernel()
    key = np.array([np.uint64(cfg.seed & _SEED_MASK), _LANGEVIN_STREAM], dtype=np.uint64)
    rng = np.random.Generator(np.random.Philox(key=key))
    dtype = np.int16 if cfg.bins <= np.iinfo(np.int16).max else np.int64
    out = np.empty(cfg.steps + 1, dtype=dtype)
    x = float(cfg.x0) % TWO_PI
    bin_scale = cfg.bins / TWO_PI
    out[0] = min(int(x * bin_scale), cfg.bins - 1)
    amp = cfg.sigma * math.sqrt(cfg.dt)
    done = 0
    while done < cfg.steps:
        block = min(_NOISE_BLOCK, cfg.steps - done)
        noise = rng.standard_normal(block)
        x = kernel(
            x,
            noise,
            cfg.b,
            2.0 * cfg.c,
            3.0 * cfg.d,
            cfg.dt,
            amp,
            bin_scale,
            cfg.bins,
            out,
            1 + done,
        )
        done += block
    return out


def count_matrix(bins, num_bins: int) -> sp.csr_matrix:
    """Transition counts ``C_ij = #{t : s_t = i, s_{t+1} = j}``.

    Raises
    ------
    EmptyTrajectory
        If the sequence holds fewer than two entries (no transition).
    ValueError
        If some index falls outside ``[0, num_bins)``.
    """
    bins = np.asarray(bins)
    if bins.size < 2:
        raise EmptyTrajectory("need at least two visited bins to count a transition")
    lo, hi = int(bins.min()), int(bins.max())
    if lo < 0 or hi >= num_bins:
        raise ValueError(f"bin indices must lie in [0, {num_bins}), got [{lo}, {hi}]")
    src = bins[:-1].astype(np.int64)
    dst = bins[1:].astype(np.int64)
    counts = np.bincount(src * num_bins + dst, minlength=num_bins * num_bins)
    return sp.csr_matrix(
        counts.reshape(num_bins, num_bins).astype(float)
    )


def run_benchmark(
    cfg: BenchmarkConfig,
    output_path=None,
    pipeline_options: Optional[PipelineOptions] = None,
    max_attempts: int = 8,
) -> list:
    """Run the random-chain ensemble through the pipeline, one row per case.

    Rows carry size, nonzero counts before and after, the optimal and
    Metropolis-Hastings distances, the residual triple, and the solve time.
    Per-case failures are recorded in the row and the run continues.  When
    ``output_path`` ends in ``.json`` the report is JSON, otherwise CSV.
    """
    rows = []
    for case in range(cfg.num_cases):
        row = {"case": case}
        try:
            P = None
            for attempt in range(max_attempts):
                try:
                    P = gen_random_chain(cfg, case, attempt)
                    break
                except DegenerateInstance:
                    continue
            if P is None:
                raise DegenerateInstance(f"case {case}: no usable instance")
            t0 = time.perf_counter()
            R, diag = nearest_sparse_reversible(P, pipeline_options)
            elapsed = time.perf_counter() - t0
            row.update(
                n=P.n,
                nnz_p=P.nnz,
                nnz_r=R.nnz,
                distance=diag.distance,
                mh_distance=diag.mh_distance,
                residual_stochasticity=diag.residuals[0],
                residual_detailed_balance=diag.residuals[1],
                residual_stationarity=diag.residuals[2],
                solve_seconds=elapsed,
            )
        except Exception as exc:
            row["error"] = f"{type(exc).__name__}: {exc}"
        rows.append(row)

    if output_path is not None:
        path = str(output_path)
        if path.endswith(".json"):
            with open(path, "w", encoding="utf-8") as fh:
                json.dump(rows, fh, indent=2)
        else:
            fields = [
                "case",
                "n",
                "nnz_p",
                "nnz_r",
                "distance",
                "mh_distance",
                "residual_stochasticity",
                "residual_detailed_balance",
                "residual_stationarity",
                "solve_seconds",
                "error",
            ]
            with open(path, "w", newline="", encoding="utf-8") as fh:
                writer = csv.DictWriter(fh, fieldnames=fields)
                writer.writeheader()
                writer.writerows(rows)
    return rows
