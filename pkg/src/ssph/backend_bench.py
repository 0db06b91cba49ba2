"""Throughput comparison of the compiled core against the NumPy fallback.

Times the two hot paths (neighbor search, pairwise-difference derivative
sums) and one end-to-end deterministic advection solve, running each once
per backend.  Results are printed as a small table; correctness is asserted
on the fly by comparing outputs across backends.
"""

from __future__ import annotations

import time

import numpy as np

from . import backend
from .backend import _neighbor_csr_python, _pair_diff_apply_python


def _time(fn, repeats: int) -> float:
    best = np.inf
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def run_benchmark(n_particles: int = 4096, n_rows: int = 6, repeats: int = 50) -> dict:
    rng = np.random.default_rng(0)
    dim = 1
    positions = np.sort(rng.uniform(0.0, 1.0, n_particles))[:, None]
    period = np.array([1.0])
    cutoff = 2.4 / n_particles * 2

    rows = {}

    # neighbor search
    indptr_c = indices_c = None
    if backend.has_compiled():
        from . import _speedups

        indptr_c, indices_c = _speedups.cell_neighbors(positions, cutoff, period)
        t_c = _time(lambda: _speedups.cell_neighbors(positions, cutoff, period), repeats)
    else:
        t_c = float("nan")
    indptr_p, indices_p = _neighbor_csr_python(positions, cutoff, period)
    t_p = _time(lambda: _neighbor_csr_python(positions, cutoff, period), repeats)
    if indptr_c is not None:
        assert np.array_equal(indptr_c, indptr_p) and np.array_equal(indices_c, indices_p)
    rows["neighbor_search"] = (t_c, t_p)

    # derivative sums
    indptr, indices = indptr_p, indices_p
    pair_row = np.repeat(np.arange(n_particles, dtype=np.int64), np.diff(indptr))
    w = rng.standard_normal(indices.shape[0])
    u = rng.standard_normal((n_rows, n_particles))
    if backend.has_compiled():
        from . import _speedups

        out_c = _speedups.pair_diff_apply(indptr, indices, w, u)
        t_c = _time(lambda: _speedups.pair_diff_apply(indptr, indices, w, u), repeats)
    else:
        out_c, t_c = None, float("nan")
    out_p = _pair_diff_apply_python(indptr, indices, pair_row, w, u)
    t_p = _time(lambda: _pair_diff_apply_python(indptr, indices, pair_row, w, u), repeats)
    if out_c is not None:
        assert np.allclose(out_c, out_p, rtol=1e-12, atol=1e-12)
    rows["pair_diff_apply"] = (t_c, t_p)

    # end-to-end deterministic advection solve (exercises the active backend)
    from .mc import solve_deterministic
    from .problems import Advection1D, DeterministicIC, DeterministicScalar, StochasticProblem
    from .solver import Numerics

    problem = StochasticProblem(
        operator=Advection1D(DeterministicScalar(0.06)),
        ics=(DeterministicIC(lambda pos: np.sin(2 * np.pi * pos[:, 0])),),
        germ_dim=1,
    )
    numerics = Numerics(resolution=min(n_particles, 512), dt=0.002, t_final=0.1, order=0)
    t_solve = _time(lambda: solve_deterministic(problem, numerics, np.zeros(1)),
                    max(3, repeats // 10))
    rows[f"advection_solve[{backend.backend_name()}]"] = (
        t_solve if backend.has_compiled() else float("nan"),
        t_solve if not backend.has_compiled() else float("nan"),
    )

    print(f"{'kernel':36s} {'compiled':>12s} {'python':>12s} {'speedup':>9s}")
    for name, (tc, tp) in rows.items():
        ratio = tp / tc if tc and np.isfinite(tc) and tc > 0 else float("nan")
        print(f"{name:36s} {tc * 1e6:10.1f}us {tp * 1e6:10.1f}us {ratio:8.1f}x")
    if not backend.has_compiled():
        print("compiled backend unavailable; showing the fallback only")
    return rows
