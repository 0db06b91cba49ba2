"""Backend selection for the hot particle loops.

Two interchangeable implementations exist:

* ``compiled`` -- Cython extension (``ssph._speedups``) with a cell-grid
  neighbor search and a fused pairwise-difference kernel.
* ``python``   -- NumPy fallback (scipy cKDTree search, reduceat sums).

The compiled core is preferred when importable; set ``SSPH_BACKEND=python``
or ``SSPH_BACKEND=compiled`` to force a choice.  Both backends produce the
same neighbor sets (indices sorted per row) and agree on all derivative
sums to floating-point roundoff; ``benchmarks/backend_bench.py`` compares
their throughput.
"""

from __future__ import annotations

import os

import numpy as np
from scipy.spatial import cKDTree

from .errors import ConfigError

_FORCED = os.environ.get("SSPH_BACKEND", "auto").lower()
if _FORCED not in ("auto", "compiled", "python"):
    raise ConfigError(f"SSPH_BACKEND must be auto|compiled|python, got {_FORCED!r}")

_speedups = None
if _FORCED in ("auto", "compiled"):
    try:
        from . import _speedups  # type: ignore[attr-defined]
    except ImportError:
        _speedups = None
        if _FORCED == "compiled":
            raise ConfigError(
                "SSPH_BACKEND=compiled but the ssph._speedups extension is not built"
            )


def backend_name() -> str:
    return "compiled" if _speedups is not None else "python"


def has_compiled() -> bool:
    return _speedups is not None


# ---------------------------------------------------------------------------
# pairwise-difference kernel:  out[l, j] = sum_p w[p] * (rows[l, k_p] - rows[l, j])
# over the CSR pair list (indptr, indices).  The pairwise form keeps constant
# fields exactly at zero.
# ---------------------------------------------------------------------------


def _pair_diff_apply_python(indptr, indices, pair_row, w, rows):
    diffs = rows[:, indices] - rows[:, pair_row]
    diffs *= w
    return np.add.reduceat(diffs, indptr[:-1], axis=1)


def pair_diff_apply(indptr, indices, pair_row, w, rows) -> np.ndarray:
    """Apply the weighted pairwise-difference sum to one or more rows.

    ``rows`` has shape (L, N); the result has the same shape.  ``pair_row``
    is the row (center particle) index of each CSR entry.
    """
    rows = np.ascontiguousarray(np.atleast_2d(rows), dtype=float)
    if _speedups is not None:
        return _speedups.pair_diff_apply(indptr, indices, w, rows)
    return _pair_diff_apply_python(indptr, indices, pair_row, w, rows)


# ---------------------------------------------------------------------------
# neighbor search: all pairs with distance <= cutoff, self included,
# indices ascending within each row.  `period` is None for open topology
# or a per-axis period array for the minimum-image metric.
# ---------------------------------------------------------------------------


def _neighbor_csr_python(positions, cutoff, period):
    if period is not None:
        tree = cKDTree(positions, boxsize=period)
    else:
        tree = cKDTree(positions)
    lists = tree.query_ball_point(positions, cutoff)
    counts = np.fromiter((len(l) for l in lists), dtype=np.int64, count=len(lists))
    indptr = np.zeros(len(lists) + 1, dtype=np.int64)
    np.cumsum(counts, out=indptr[1:])
    indices = np.empty(indptr[-1], dtype=np.int64)
    for j, lst in enumerate(lists):
        row = np.sort(np.asarray(lst, dtype=np.int64))
        indices[indptr[j] : indptr[j + 1]] = row
    return indptr, indices


def neighbor_csr(positions, cutoff, period=None):
    """CSR neighbor lists (indptr, indices) under the requested topology."""
    positions = np.ascontiguousarray(np.atleast_2d(positions), dtype=float)
    if period is not None:
        period = np.ascontiguousarray(period, dtype=float)
        if np.any(cutoff >= period / 2.0):
            raise ConfigError(
                f"search radius {cutoff} must be below half the period "
                f"{period.min() / 2.0} for the minimum-image metric"
            )
    if _speedups is not None:
        return _speedups.cell_neighbors(positions, float(cutoff), period)
    return _neighbor_csr_python(positions, cutoff, period)
