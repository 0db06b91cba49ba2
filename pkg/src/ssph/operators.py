"""SPH derivative operators with optional gradient correction.

The first-derivative operator at particle j is the pairwise-difference sum

    D_a u |_j = sum_{k in N(j)} V_k (u_k - u_j) dW(x_j - x_k)/d(x_k)_a ,

i.e. the kernel gradient is taken with respect to the neighbor position.
Note that without correction this sum approximates the *negative* spatial
derivative up to a lattice-dependent scale (for a linear field on a uniform
lattice it evaluates to about -1.02 at h = 1.2 dx rather than +1).  The
per-particle correction matrix

    B_j = ( sum_k V_k (x_k - x_j) (x) grad_k W_jk )^{-1}

repairs both the sign and the scale: corrected derivatives reproduce
constants exactly and linear fields to roundoff, so solvers use the
corrected form by default.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import backend
from .kernels import SmoothingKernel, gradient_factor
from .particles import NeighborLists, ParticleSystem

DEFAULT_CONDITION_CAP = 1e12


def pair_displacements(system: ParticleSystem, neighbors: NeighborLists) -> np.ndarray:
    """Center-minus-neighbor displacement for every CSR pair (minimum image)."""
    pos = system.positions
    return system.topology.displacement(pos[neighbors.pair_row], pos[neighbors.indices])


def pair_gradient_weights(system: ParticleSystem, neighbors: NeighborLists,
                          kernel: SmoothingKernel) -> np.ndarray:
    """V_k * grad_k W(x_j - x_k) for every pair; shape (nnz, d)."""
    disp = pair_displacements(system, neighbors)
    q = np.linalg.norm(disp, axis=1) / kernel.h
    factor = -gradient_factor(kernel, q)
    w = factor[:, None] * disp
    w *= system.volumes[neighbors.indices][:, None]
    return w


def moment_matrices(system: ParticleSystem, neighbors: NeighborLists,
                    kernel: SmoothingKernel) -> np.ndarray:
    """Per-particle moment matrix sum_k V_k (x_k - x_j) (x) grad_k W; (N, d, d)."""
    disp = pair_displacements(system, neighbors)
    gw = pair_gradient_weights(system, neighbors, kernel)
    outer = -disp[:, :, None] * gw[:, None, :]  # (x_k - x_j) = -disp
    return np.add.reduceat(outer, neighbors.indptr[:-1], axis=0)


def correction_matrices(system: ParticleSystem, neighbors: NeighborLists,
                        kernel: SmoothingKernel,
                        condition_cap: float = DEFAULT_CONDITION_CAP,
                        ) -> tuple[np.ndarray, np.ndarray]:
    """Invert the moment matrices; singular particles fall back to identity.

    Returns (B, fallback) where B has shape (N, d, d) and fallback flags the
    particles whose moment matrix was singular or worse conditioned than
    ``condition_cap``.
    """
    m = moment_matrices(system, neighbors, kernel)
    n, d, _ = m.shape
    b = np.empty_like(m)
    fallback = np.zeros(n, dtype=bool)
    eye = np.eye(d)
    if d == 1:
        diag = m[:, 0, 0]
        bad = ~np.isfinite(diag) | (np.abs(diag) * condition_cap < 1.0)
        with np.errstate(divide="ignore"):
            b[:, 0, 0] = np.where(bad, 1.0, 1.0 / np.where(bad, 1.0, diag))
        fallback = bad
        return b, fallback
    for j in range(n):
        mj = m[j]
        if not np.all(np.isfinite(mj)):
            b[j] = eye
            fallback[j] = True
            continue
        try:
            cond = np.linalg.cond(mj)
        except np.linalg.LinAlgError:
            cond = np.inf
        if not np.isfinite(cond) or cond > condition_cap:
            b[j] = eye
            fallback[j] = True
        else:
            b[j] = np.linalg.inv(mj)
    return b, fallback


@dataclass
class SphOperator:
    """Precomputed derivative weights for one particle geometry.

    Holds the CSR pair structure, per-axis gradient weights and correction
    matrices.  All apply methods are pure: they read immutable arrays and
    return new ones, so concurrent use is safe.
    """

    system: ParticleSystem
    neighbors: NeighborLists
    kernel: SmoothingKernel
    weights: np.ndarray        # (d, nnz), contiguous per axis
    correction: np.ndarray     # (N, d, d)
    fallback: np.ndarray       # (N,) bool
    pair_row: np.ndarray

    @classmethod
    def build(cls, system: ParticleSystem, neighbors: NeighborLists,
              kernel: SmoothingKernel,
              condition_cap: float = DEFAULT_CONDITION_CAP) -> "SphOperator":
        gw = pair_gradient_weights(system, neighbors, kernel)
        weights = np.ascontiguousarray(gw.T)
        correction, fallback = correction_matrices(system, neighbors, kernel, condition_cap)
        return cls(system=system, neighbors=neighbors, kernel=kernel,
                   weights=weights, correction=correction, fallback=fallback,
                   pair_row=neighbors.pair_row)

    @property
    def dim(self) -> int:
        return self.system.dim

    def raw_axis(self, rows: np.ndarray, axis: int) -> np.ndarray:
        """Uncorrected pairwise-difference sum along one axis; rows (L, N)."""
        return backend.pair_diff_apply(
            self.neighbors.indptr, self.neighbors.indices, self.pair_row,
            self.weights[axis], rows,
        )

    def raw_gradient(self, rows: np.ndarray) -> np.ndarray:
        """All axis sums; shape (d, L, N)."""
        rows = np.atleast_2d(rows)
        return np.stack([self.raw_axis(rows, a) for a in range(self.dim)])

    def gradient(self, rows: np.ndarray, corrected: bool = True) -> np.ndarray:
        """(d, L, N) gradient, with the correction matrices applied if asked."""
        raw = self.raw_gradient(rows)
        if not corrected:
            return raw
        return np.einsum("jab,blj->alj", self.correction, raw, optimize=True)

    def derivative(self, rows: np.ndarray, axis: int, corrected: bool = True) -> np.ndarray:
        """Single-axis derivative of one or more rows; output matches input shape."""
        rows = np.asarray(rows, dtype=float)
        single = rows.ndim == 1
        if corrected and self.dim > 1:
            out = self.gradient(rows, corrected=True)[axis]
        elif corrected:
            out = self.raw_axis(np.atleast_2d(rows), 0) * self.correction[:, 0, 0]
        else:
            out = self.raw_axis(np.atleast_2d(rows), axis)
        return out[0] if single else out


# --------------------------------------------------------------------------
# free-function surface mirroring the operator contracts
# --------------------------------------------------------------------------


def sph_derivative(values, system: ParticleSystem, neighbors: NeighborLists,
                   kernel: SmoothingKernel, axis: int = 0,
                   corrected: bool = False) -> np.ndarray:
    """Derivative of a per-particle scalar field along one axis."""
    values = np.asarray(values, dtype=float)
    if values.shape[-1] != system.n:
        raise ValueError(
            f"field has {values.shape[-1]} entries for {system.n} particles"
        )
    op = SphOperator.build(system, neighbors, kernel)
    return op.derivative(values, axis, corrected)


def second_derivative_nested(values, system: ParticleSystem, neighbors: NeighborLists,
                             kernel: SmoothingKernel, axis: int = 0,
                             corrected: bool = False) -> np.ndarray:
    """Second derivative by applying the first-derivative operator twice."""
    op = SphOperator.build(system, neighbors, kernel)
    first = op.derivative(np.asarray(values, dtype=float), axis, corrected)
    return op.derivative(first, axis, corrected)


def correction_matrix(system: ParticleSystem, neighbors: NeighborLists,
                      kernel: SmoothingKernel, j: int,
                      condition_cap: float = DEFAULT_CONDITION_CAP,
                      ) -> tuple[np.ndarray, bool]:
    """Correction matrix B_j for one particle plus its fallback flag."""
    b, flags = correction_matrices(system, neighbors, kernel, condition_cap)
    return b[j], bool(flags[j])


def zero_sum_residual(system: ParticleSystem, neighbors: NeighborLists,
                      kernel: SmoothingKernel) -> np.ndarray:
    """|sum_k V_k grad W_jk| per particle; near zero for full symmetric support."""
    gw = pair_gradient_weights(system, neighbors, kernel)
    sums = np.add.reduceat(gw, neighbors.indptr[:-1], axis=0)
    return np.linalg.norm(sums, axis=1)
