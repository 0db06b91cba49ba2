"""Smoothing kernels for particle interpolation.

Two families are provided:

* ``cubic``    -- the cubic B-spline with compact support radius ``2h``.
* ``gaussian`` -- a Gaussian truncated at ``3h`` and renormalized so the
  truncated profile still integrates to one.

Both are positive, radially symmetric and normalized,

    integral W(x - x'; h) dx' = 1,

with a dimension-dependent normalization constant.  Gradients follow the
neighbor-position convention used by the derivative operator: for a pair
with displacement ``r = x_center - x_neighbor`` the returned vector is the
gradient of ``W`` with respect to the *neighbor* position.  It is odd in
``r`` and vanishes at ``r = 0``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError

GAUSSIAN_CUTOFF = 3.0  # in units of h

# captured probability mass of the truncated Gaussian profile, per dimension
_GAUSS_MASS_1D = math.erf(GAUSSIAN_CUTOFF)
_GAUSS_MASS_2D = 1.0 - math.exp(-GAUSSIAN_CUTOFF**2)

_CUBIC_SIGMA = {1: 2.0 / 3.0, 2: 10.0 / (7.0 * math.pi)}


@dataclass(frozen=True)
class SmoothingKernel:
    """A smoothing kernel of a given family, width and dimension."""

    family: str  # "cubic" | "gaussian"
    h: float
    dim: int

    def __post_init__(self):
        if self.family not in ("cubic", "gaussian"):
            raise ConfigError(f"unknown kernel family {self.family!r}")
        if not (self.h > 0.0 and math.isfinite(self.h)):
            raise ConfigError(f"smoothing length must be positive, got {self.h}")
        if self.dim not in (1, 2):
            raise ConfigError(f"kernel dimension must be 1 or 2, got {self.dim}")

    @property
    def support_radius(self) -> float:
        """Radius beyond which value and gradient are exactly zero."""
        if self.family == "cubic":
            return 2.0 * self.h
        return GAUSSIAN_CUTOFF * self.h

    def value_of_q(self, q: np.ndarray) -> np.ndarray:
        """Kernel value as a function of q = |r| / h (vectorized)."""
        q = np.asarray(q, dtype=float)
        if self.family == "cubic":
            sigma = _CUBIC_SIGMA[self.dim] / self.h**self.dim
            out = np.where(
                q <= 1.0,
                1.0 - 1.5 * q**2 + 0.75 * q**3,
                0.25 * np.clip(2.0 - q, 0.0, None) ** 3,
            )
            return sigma * out
        mass = _GAUSS_MASS_1D if self.dim == 1 else _GAUSS_MASS_2D
        sigma = 1.0 / (math.pi ** (self.dim / 2.0) * self.h**self.dim * mass)
        return sigma * np.where(q < GAUSSIAN_CUTOFF, np.exp(-(q**2)), 0.0)

    def _slope_over_q(self, q: np.ndarray) -> np.ndarray:
        """(dW/dq) / q without the normalization constant; finite at q = 0."""
        q = np.asarray(q, dtype=float)
        if self.family == "cubic":
            inner = -3.0 + 2.25 * q
            with np.errstate(divide="ignore", invalid="ignore"):
                outer = np.where(q > 0.0, -0.75 * (2.0 - q) ** 2 / q, 0.0)
            out = np.where(q <= 1.0, inner, np.where(q < 2.0, outer, 0.0))
            return _CUBIC_SIGMA[self.dim] / self.h**self.dim * out
        mass = _GAUSS_MASS_1D if self.dim == 1 else _GAUSS_MASS_2D
        sigma = 1.0 / (math.pi ** (self.dim / 2.0) * self.h**self.dim * mass)
        return sigma * np.where(q < GAUSSIAN_CUTOFF, -2.0 * np.exp(-(q**2)), 0.0)


def _check_displacement(r: np.ndarray, kernel: SmoothingKernel) -> np.ndarray:
    r = np.asarray(r, dtype=float)
    if r.shape[-1] != kernel.dim:
        raise ValueError(
            f"displacement has {r.shape[-1]} components, kernel is {kernel.dim}D"
        )
    if not np.all(np.isfinite(r)):
        raise ValueError("displacement contains non-finite components")
    return r


def kernel_value(r, kernel: SmoothingKernel) -> float | np.ndarray:
    """W(|r|; h).  ``r`` is a displacement vector or an (n, dim) batch."""
    r = _check_displacement(r, kernel)
    q = np.linalg.norm(np.atleast_2d(r), axis=-1) / kernel.h
    out = kernel.value_of_q(q)
    return float(out[0]) if r.ndim == 1 else out


def kernel_gradient(r, kernel: SmoothingKernel) -> np.ndarray:
    """Gradient of W with respect to the neighbor position.

    For r = x_center - x_neighbor this is -dW/dr * r/|r|; it is odd in r
    and zero at the origin.  Accepts a single vector or an (n, dim) batch.
    """
    r = _check_displacement(r, kernel)
    r2 = np.atleast_2d(r)
    q = np.linalg.norm(r2, axis=-1) / kernel.h
    # grad_neighbor W = -(dW/dq)/(q h^2) * r ; the factor stays finite at q = 0
    factor = -gradient_factor(kernel, q)
    out = factor[:, None] * r2
    return out[0] if r.ndim == 1 else out


def gradient_factor(kernel: SmoothingKernel, q: np.ndarray) -> np.ndarray:
    """(dW/dq)/(q h^2) evaluated at q, used by pair-weight assembly."""
    return kernel._slope_over_q(q) / kernel.h**2
