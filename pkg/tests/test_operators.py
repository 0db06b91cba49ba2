import numpy as np
import pytest

import ssph.backend as backend
from ssph.kernels import SmoothingKernel, kernel_gradient
from ssph.operators import (
    SphOperator,
    correction_matrix,
    moment_matrices,
    second_derivative_nested,
    sph_derivative,
    zero_sum_residual,
)
from ssph.particles import dirichlet_grid, neighbor_lists, open_line, periodic_line


def uniform_1d(n=512, h_factor=1.2, periodic=True):
    build = periodic_line if periodic else open_line
    system, h = build(n, 1.0, h_factor, 2.0)
    kernel = SmoothingKernel("cubic", h, 1)
    return system, neighbor_lists(system), kernel


def assemble_moment_oracle(system, neighbors, kernel, j):
    """Literal moment sum: sum_k V_k (x_k - x_j) grad_k W(x_j - x_k)."""
    pos = system.positions
    total = np.zeros((system.dim, system.dim))
    for k in neighbors.row(j):
        d = system.topology.displacement(pos[j], pos[k][None, :])[0]
        g = kernel_gradient(d, kernel)
        total += np.outer(-d, g) * system.volumes[k]
    return total


def test_interior_moment_matrix_frozen_value():
    """At h = 1.2 dx the interior moment sum is -1.0223765432... (not -1);
    the inverse matches, and B times the moment matrix is the identity."""
    system, nl, kernel = uniform_1d()
    j = 100
    oracle = assemble_moment_oracle(system, nl, kernel, j)
    assert np.isclose(oracle[0, 0], -1.0223765432098766, atol=1e-10)
    b, flag = correction_matrix(system, nl, kernel, j)
    assert not flag
    assert np.isclose(b[0, 0] * oracle[0, 0], 1.0, atol=1e-10)


def test_moment_sum_is_exact_at_h_2dx():
    """With h = 2 dx the discrete moment sum hits the continuum value -1
    exactly, so B is -1 there."""
    system, h = periodic_line(512, 1.0, 2.0, 2.0)
    kernel = SmoothingKernel("cubic", h, 1)
    nl = neighbor_lists(system)
    oracle = assemble_moment_oracle(system, nl, kernel, 7)
    assert np.isclose(oracle[0, 0], -1.0, atol=1e-12)
    b, _ = correction_matrix(system, nl, kernel, 7)
    assert np.isclose(b[0, 0], -1.0, atol=1e-8)


def test_boundary_particle_correction_restores_linears():
    """Near the open end the moment matrix differs from the interior value,
    yet the corrected derivative of u(x) = x is exactly one there."""
    system, nl, kernel = uniform_1d(periodic=False)
    b_end, flag = correction_matrix(system, nl, kernel, 0)
    b_mid, _ = correction_matrix(system, nl, kernel, 256)
    assert not flag
    assert abs(b_end[0, 0] - b_mid[0, 0]) > 1e-3
    d = sph_derivative(system.positions[:, 0], system, nl, kernel, corrected=True)
    assert np.abs(d - 1.0).max() < 1e-8


def test_isolated_particle_falls_back_to_identity():
    from ssph.particles import OpenTopology, ParticleSystem

    system = ParticleSystem(positions=np.array([[0.0], [5.0]]), masses=np.ones(2),
                            densities=np.ones(2), topology=OpenTopology(),
                            search_radius=0.5)
    nl = neighbor_lists(system)
    kernel = SmoothingKernel("cubic", 0.2, 1)
    b, flag = correction_matrix(system, nl, kernel, 0)
    assert flag
    assert np.allclose(b, np.eye(1))


def test_constant_field_derivative_is_exactly_zero():
    system, nl, kernel = uniform_1d(n=128)
    d = sph_derivative(np.full(system.n, 3.7), system, nl, kernel, corrected=False)
    assert np.all(d == 0.0)
    d2 = second_derivative_nested(np.full(system.n, 3.7), system, nl, kernel)
    assert np.all(d2 == 0.0)


def test_uncorrected_sum_has_flipped_sign_and_scale():
    """The raw pairwise sum (gradient w.r.t. the neighbor) gives about
    -1.0224 for a linear field on the interior; the correction repairs it."""
    system, nl, kernel = uniform_1d(periodic=False)
    x = system.positions[:, 0]
    raw = sph_derivative(x, system, nl, kernel, corrected=False)
    interior = slice(10, -10)
    assert np.allclose(raw[interior], -1.0223765432098766, atol=1e-10)


def test_corrected_sine_derivative():
    system, nl, kernel = uniform_1d()
    x = system.positions[:, 0]
    d = sph_derivative(np.sin(2 * np.pi * x), system, nl, kernel, corrected=True)
    err = np.abs(d - 2 * np.pi * np.cos(2 * np.pi * x)).max()
    assert err <= 5e-3 * 2 * np.pi


def test_second_derivative_of_quadratic():
    system, nl, kernel = uniform_1d(periodic=False)
    x = system.positions[:, 0]
    d2 = second_derivative_nested(x**2, system, nl, kernel, corrected=True)
    interior = (x > 4 * kernel.h) & (x < 1 - 4 * kernel.h)
    assert np.abs(d2[interior] - 2.0).max() < 2e-2


def test_2d_laplacian_by_single_axis_nesting():
    """x-axis nesting applied to sin(2 pi x) approximates its Laplacian."""
    system, h = dirichlet_grid(48, 1.6, 2.0)
    nl = neighbor_lists(system)
    kernel = SmoothingKernel("cubic", h, 2)
    pos = system.positions
    u = np.sin(2 * np.pi * pos[:, 0])
    d2 = second_derivative_nested(u, system, nl, kernel, axis=0, corrected=True)
    exact = -4 * np.pi**2 * np.sin(2 * np.pi * pos[:, 0])
    margin = 2 * system.search_radius
    real = np.arange(system.n_real)
    inner = real[(pos[real, 0] > margin) & (pos[real, 0] < 1 - margin)
                 & (pos[real, 1] > margin) & (pos[real, 1] < 1 - margin)]
    rel = np.abs(d2[inner] - exact[inner]).max() / (4 * np.pi**2)
    assert rel < 0.05


def test_zero_sum_property_on_interior():
    """sum_k V_k grad W_jk vanishes on a full symmetric stencil."""
    system, nl, kernel = uniform_1d()
    res = zero_sum_residual(system, nl, kernel)
    assert res.max() < 1e-8


def test_symmetric_form_matches_classical_form():
    """The pairwise-difference form and the plain -sum u_j grad W form agree
    on interior particles (they differ by the zero-sum term times u_i)."""
    system, nl, kernel = uniform_1d(periodic=False)
    pos = system.positions
    rng = np.random.default_rng(21)
    u = rng.standard_normal(system.n)
    j_values = [50, 200, 400]
    for j in j_values:
        sym = 0.0
        classical = 0.0
        for k in nl.row(j):
            d = system.topology.displacement(pos[j], pos[k][None, :])[0]
            g = kernel_gradient(d, kernel)[0] * system.volumes[k]
            sym += (u[j] - u[k]) * g
            classical += -u[k] * g
        assert abs(sym - classical) < 1e-8


def test_field_length_mismatch_rejected():
    system, nl, kernel = uniform_1d(n=32)
    with pytest.raises(ValueError):
        sph_derivative(np.zeros(31), system, nl, kernel)


def test_backends_agree_on_derivatives():
    """Compiled and pure pairwise sums agree to roundoff on random fields."""
    if not backend.has_compiled():
        pytest.skip("compiled backend not built")
    from ssph import _speedups
    from ssph.backend import _pair_diff_apply_python

    system, nl, kernel = uniform_1d(n=200)
    op = SphOperator.build(system, nl, kernel)
    rng = np.random.default_rng(9)
    rows = rng.standard_normal((4, system.n))
    compiled = _speedups.pair_diff_apply(nl.indptr, nl.indices, op.weights[0], rows)
    pure = _pair_diff_apply_python(nl.indptr, nl.indices, nl.pair_row,
                                   op.weights[0], rows)
    scale = np.abs(pure).max()
    assert np.abs(compiled - pure).max() < 1e-12 * scale
