"""Random-field discretization: Karhunen-Loeve and Fourier representations.

The continuous eigenproblem

    integral C(x, x') psi_k(x') dx' = lambda_k psi_k(x)

is discretized with the Nystrom method on the particle grid: with diagonal
quadrature weights W the symmetric matrix W^{1/2} C W^{1/2} is diagonalized
and eigenvectors are mapped back to grid eigenfunctions, which are then
orthonormal in the weighted discrete inner product sum_i w_i psi_k psi_m.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError


@dataclass(frozen=True)
class SquaredExponentialKernel:
    """k(x, x') = variance * exp(-|x - x'|^2 / length_scale^2)."""

    variance: float
    length_scale: float

    def __post_init__(self):
        if self.variance < 0:
            raise ConfigError("variance must be non-negative")
        if self.length_scale <= 0:
            raise ConfigError("length scale must be positive")

    def gram(self, grid: np.ndarray) -> np.ndarray:
        grid = np.atleast_2d(np.asarray(grid, dtype=float))
        if grid.shape[0] < grid.shape[1]:
            raise ConfigError("grid must be (n, d) with one row per point")
        sq = np.sum((grid[:, None, :] - grid[None, :, :]) ** 2, axis=2)
        return self.variance * np.exp(-sq / self.length_scale**2)


@dataclass(frozen=True)
class FixedM:
    m: int


@dataclass(frozen=True)
class EnergyTarget:
    fraction: float


@dataclass(frozen=True)
class KLExpansion:
    """Truncated expansion mean + sum_k sqrt(lambda_k) psi_k(x) xi_k on a grid."""

    mean: np.ndarray          # (J,)
    eigenvalues: np.ndarray   # (M,), descending
    functions: np.ndarray     # (M, J), orthonormal under `weights`
    weights: np.ndarray       # (J,) quadrature weights
    total_energy: float       # sum of the full (untruncated) spectrum

    def __post_init__(self):
        if np.any(np.diff(self.eigenvalues) > 0):
            raise ConfigError("eigenvalues must be sorted in descending order")

    @property
    def m(self) -> int:
        return self.eigenvalues.shape[0]

    @property
    def energy_fraction(self) -> float:
        if self.total_energy <= 0.0:
            return 1.0
        return float(np.sum(self.eigenvalues) / self.total_energy)

    @property
    def modes(self) -> np.ndarray:
        """sqrt(lambda_k) psi_k rows, the linear map from germ to field; (M, J)."""
        return np.sqrt(self.eigenvalues)[:, None] * self.functions


def _fix_signs(functions: np.ndarray) -> np.ndarray:
    """Make the first significantly nonzero component of each mode positive."""
    out = functions.copy()
    for k in range(out.shape[0]):
        row = out[k]
        nz = np.flatnonzero(np.abs(row) > 1e-12 * max(np.abs(row).max(), 1e-300))
        if nz.size and row[nz[0]] < 0:
            out[k] = -row
    return out


def _truncate(lam: np.ndarray, truncation, total: float) -> int:
    if isinstance(truncation, FixedM):
        if truncation.m < 1 or truncation.m > lam.size:
            raise ConfigError(f"truncation M={truncation.m} outside 1..{lam.size}")
        return truncation.m
    if isinstance(truncation, EnergyTarget):
        frac = truncation.fraction
        if not (0.0 < frac <= 1.0):
            raise ConfigError("energy fraction must lie in (0, 1]")
        cum = np.cumsum(lam)
        reachable = cum[-1] / total if total > 0 else 1.0
        hits = np.flatnonzero(cum >= frac * total)
        if hits.size == 0:
            raise ConfigError(
                f"energy target {frac:.4f} unreachable with {lam.size} grid modes; "
                f"achievable fraction is {reachable:.6f}"
            )
        return int(hits[0]) + 1
    raise ConfigError(f"unknown truncation rule {truncation!r}")


def kl_decompose(kernel: SquaredExponentialKernel, grid: np.ndarray,
                 weights: np.ndarray, truncation, mean=None) -> KLExpansion:
    """Nystrom discretization of the covariance eigenproblem on a grid."""
    grid = np.atleast_2d(np.asarray(grid, dtype=float))
    n = grid.shape[0]
    if n == 0:
        raise ConfigError("grid must be nonempty")
    weights = np.asarray(weights, dtype=float)
    if weights.shape != (n,) or np.any(weights <= 0):
        raise ConfigError("weights must be positive, one per grid point")

    gram = kernel.gram(grid)
    sw = np.sqrt(weights)
    sym = sw[:, None] * gram * sw[None, :]
    lam, vec = np.linalg.eigh(sym)
    lam, vec = lam[::-1].copy(), vec[:, ::-1].copy()
    floor = -1e-10 * max(kernel.variance, 1e-300)
    if np.any(lam < floor):
        raise ConfigError("covariance matrix is not positive semidefinite")
    lam = np.clip(lam, 0.0, None)
    # total field energy is the weighted trace; clipping may lose a sliver
    # of it, which is what makes an energy target genuinely unreachable
    total = float(np.sum(weights * np.diag(gram)))
    m = _truncate(lam, truncation, total)
    functions = _fix_signs((vec[:, :m] / sw[:, None]).T)
    mean_vals = np.zeros(n) if mean is None else np.asarray(mean, dtype=float)
    return KLExpansion(mean=mean_vals, eigenvalues=lam[:m], functions=functions,
                       weights=weights, total_energy=total)


def kl_from_samples(samples: np.ndarray, weights: np.ndarray, m: int) -> KLExpansion:
    """Empirical KL of an ensemble: eigenpairs of the sample covariance.

    Uses the thin SVD of the centered, weight-scaled sample matrix, which is
    equivalent to diagonalizing the empirical covariance but never forms the
    (J, J) matrix, so large grids stay tractable.
    """
    samples = np.atleast_2d(np.asarray(samples, dtype=float))
    n_samp, n_grid = samples.shape
    if n_samp < 2:
        raise ConfigError("need at least two samples for an empirical covariance")
    weights = np.asarray(weights, dtype=float)
    if weights.shape != (n_grid,) or np.any(weights <= 0):
        raise ConfigError("weights must be positive, one per grid point")
    if not (1 <= m <= min(n_samp - 1, n_grid)):
        raise ConfigError(f"truncation M={m} outside 1..{min(n_samp - 1, n_grid)}")

    mean = samples.mean(axis=0)
    sw = np.sqrt(weights)
    y = (samples - mean) * sw[None, :] / np.sqrt(n_samp - 1)
    _, sv, vt = np.linalg.svd(y, full_matrices=False)
    lam = sv**2
    total = float(np.sum(lam))
    functions = _fix_signs(vt[:m] / sw[None, :])
    return KLExpansion(mean=mean, eigenvalues=lam[:m], functions=functions,
                       weights=weights, total_energy=total)


def kl_realize(expansion: KLExpansion, xi: np.ndarray) -> np.ndarray:
    """mean + sum_k sqrt(lambda_k) psi_k xi_k for one germ vector."""
    xi = np.asarray(xi, dtype=float)
    if xi.shape != (expansion.m,):
        raise ValueError(f"germ has {xi.shape} entries, expansion holds {expansion.m} modes")
    return expansion.mean + xi @ expansion.modes


def trapezoid_weights(axis: np.ndarray) -> np.ndarray:
    """Composite trapezoid weights for a sorted 1D grid."""
    axis = np.asarray(axis, dtype=float)
    if axis.size == 1:
        return np.ones(1)
    w = np.empty_like(axis)
    w[1:-1] = (axis[2:] - axis[:-2]) / 2.0
    w[0] = (axis[1] - axis[0]) / 2.0
    w[-1] = (axis[-1] - axis[-2]) / 2.0
    return w


def uniform_cell_weights(n: int, period: float = 1.0) -> np.ndarray:
    """Equal cell weights for a periodic lattice of n points."""
    return np.full(n, period / n)


FOURIER_MODE_RANGE = 4


class FourierDesign:
    """Precomputed sin/cos mode matrices of a grid, for repeated field draws.

    Evaluating the trigonometric design is the dominant cost of a single
    field; ensembles reuse it so each draw reduces to two matrix products.
    """

    def __init__(self, grid: np.ndarray):
        grid = np.atleast_2d(np.asarray(grid, dtype=float))
        if grid.shape[1] != 2:
            raise ConfigError("fourier field needs a 2D grid")
        r = FOURIER_MODE_RANGE
        modes = np.array([(i, j) for i in range(-r, r + 1) for j in range(-r, r + 1)])
        phase = 2.0 * np.pi * (grid @ modes.T)  # (J, (2r+1)^2)
        self.sin = np.sin(phase)
        self.cos = np.cos(phase)

    def field(self, coeff_sin: np.ndarray, coeff_cos: np.ndarray,
              normalize: bool = False) -> np.ndarray:
        size = 2 * FOURIER_MODE_RANGE + 1
        coeff_sin = np.asarray(coeff_sin, dtype=float)
        coeff_cos = np.asarray(coeff_cos, dtype=float)
        if coeff_sin.shape != (size, size) or coeff_cos.shape != (size, size):
            raise ConfigError(f"coefficients must be ({size}, {size}) arrays")
        w = self.sin @ coeff_sin.ravel() + self.cos @ coeff_cos.ravel()
        if normalize:
            peak = np.abs(w).max()
            if peak == 0.0:
                raise ConfigError("cannot normalize an identically zero field")
            w = 2.0 * w / peak
        return w


def fourier_random_field(grid: np.ndarray, coeff_sin: np.ndarray,
                         coeff_cos: np.ndarray, normalize: bool = False) -> np.ndarray:
    """Truncated 2D Fourier field over modes i, j in [-4, 4].

        w(x, y) = sum_ij a_ij sin(2 pi (i x + j y)) + b_ij cos(2 pi (i x + j y))

    With ``normalize`` the field is rescaled to max |w| = 2 exactly.
    """
    return FourierDesign(grid).field(coeff_sin, coeff_cos, normalize)


def sample_fourier_coefficients(rng: np.random.Generator) -> tuple[np.ndarray, np.ndarray]:
    """Draw the i.i.d. standard-normal sin/cos coefficient grids."""
    size = 2 * FOURIER_MODE_RANGE + 1
    return rng.standard_normal((size, size)), rng.standard_normal((size, size))


def spectrum_to_csv(expansion: KLExpansion, path) -> None:
    """Write (k, lambda_k, cumulative energy fraction) rows."""
    cum = np.cumsum(expansion.eigenvalues)
    total = expansion.total_energy if expansion.total_energy > 0 else 1.0
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("k,eigenvalue,cumulative_energy_fraction\n")
        for k, (lam, c) in enumerate(zip(expansion.eigenvalues, cum), start=1):
            fh.write(f"{k},{lam!r},{c / total!r}\n")
