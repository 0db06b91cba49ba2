import numpy as np
import pytest

from ssph.errors import ConfigError
from ssph.kernels import SmoothingKernel, kernel_gradient, kernel_value

FAMILIES = [("cubic", 1), ("cubic", 2), ("gaussian", 1), ("gaussian", 2)]


def midpoint_integral_1d(kernel, n=4001):
    half = kernel.support_radius
    edges = np.linspace(-half, half, n + 1)
    mid = (edges[:-1] + edges[1:]) / 2
    vals = kernel_value(mid[:, None], kernel)
    return vals.sum() * (edges[1] - edges[0])


def midpoint_integral_2d(kernel, n=401):
    half = kernel.support_radius
    edges = np.linspace(-half, half, n + 1)
    mid = (edges[:-1] + edges[1:]) / 2
    xx, yy = np.meshgrid(mid, mid, indexing="ij")
    pts = np.column_stack([xx.ravel(), yy.ravel()])
    vals = kernel_value(pts, kernel)
    return vals.sum() * (edges[1] - edges[0]) ** 2


def test_cubic_value_outside_support_is_zero():
    """The cubic spline has compact support of radius 2h."""
    k = SmoothingKernel("cubic", 0.1, 1)
    assert kernel_value(np.array([0.25]), k) == 0.0
    assert np.all(kernel_gradient(np.array([0.25]), k) == 0.0)


def test_midpoint_normalization_1d():
    """Midpoint-rule integral over the support equals one within 1e-4."""
    for family in ("cubic", "gaussian"):
        k = SmoothingKernel(family, 0.1, 1)
        assert abs(midpoint_integral_1d(k) - 1.0) < 1e-4, family


def test_midpoint_normalization_2d():
    for family in ("cubic", "gaussian"):
        k = SmoothingKernel(family, 0.05, 2)
        assert abs(midpoint_integral_2d(k) - 1.0) < 1e-4, family


@pytest.mark.parametrize("family,dim", FAMILIES)
def test_radial_symmetry(family, dim):
    """W depends only on |r|: W(r) = W(-r) for random displacements."""
    k = SmoothingKernel(family, 0.1, dim)
    rng = np.random.default_rng(3)
    r = rng.uniform(-2.5 * k.h, 2.5 * k.h, size=(100, dim))
    assert np.allclose(kernel_value(r, k), kernel_value(-r, k), atol=0.0)


@pytest.mark.parametrize("family,dim", FAMILIES)
def test_non_negative(family, dim):
    k = SmoothingKernel(family, 0.1, dim)
    rng = np.random.default_rng(4)
    r = rng.uniform(-4 * k.h, 4 * k.h, size=(500, dim))
    assert np.all(kernel_value(r, k) >= 0.0)


def test_gradient_zero_at_origin():
    for family, dim in FAMILIES:
        k = SmoothingKernel(family, 0.1, dim)
        assert np.all(kernel_gradient(np.zeros(dim), k) == 0.0)


@pytest.mark.parametrize("family,dim", FAMILIES)
def test_gradient_matches_finite_difference(family, dim):
    """Analytic gradient w.r.t. the neighbor position vs central differences.

    Perturbing the neighbor x_k by +eps shifts the displacement r = x_j - x_k
    by -eps, so the finite-difference stencil is W(r - eps) - W(r + eps).
    """
    k = SmoothingKernel(family, 0.1, dim)
    rng = np.random.default_rng(5)
    # stay inside the support with margin so the stencil never crosses edges
    r = rng.uniform(-0.85 * k.support_radius, 0.85 * k.support_radius, size=(100, dim))
    g = kernel_gradient(r, k)
    eps = 1e-6 * k.h
    scale = np.abs(kernel_value(np.zeros((1, dim)), k))[0]
    for a in range(dim):
        rp = r.copy()
        rp[:, a] -= eps
        rm = r.copy()
        rm[:, a] += eps
        fd = (kernel_value(rp, k) - kernel_value(rm, k)) / (2 * eps)
        assert np.abs(fd - g[:, a]).max() < 1e-6 * scale / k.h


@pytest.mark.parametrize("family,dim", FAMILIES)
def test_gradient_antisymmetry(family, dim):
    k = SmoothingKernel(family, 0.1, dim)
    rng = np.random.default_rng(6)
    r = rng.uniform(-2 * k.h, 2 * k.h, size=(50, dim))
    assert np.allclose(kernel_gradient(r, k), -kernel_gradient(-r, k), atol=0.0)


def test_non_finite_displacement_rejected():
    k = SmoothingKernel("cubic", 0.1, 1)
    with pytest.raises(ValueError):
        kernel_value(np.array([np.nan]), k)
    with pytest.raises(ValueError):
        kernel_gradient(np.array([np.inf]), k)


def test_invalid_configuration_rejected():
    with pytest.raises(ConfigError):
        SmoothingKernel("quartic", 0.1, 1)
    with pytest.raises(ConfigError):
        SmoothingKernel("cubic", -0.1, 1)
    with pytest.raises(ConfigError):
        SmoothingKernel("cubic", 0.1, 3)
