"""Stochastic-Galerkin SPH solver with an embedded Monte Carlo reference.

A mesh-free solver for transport problems with random inputs: spatial
variation is discretized with smoothed-particle kernels, randomness with an
orthonormal polynomial chaos expansion, and the two are coupled through a
stochastic Galerkin projection.  A Monte Carlo campaign driver built on the
same deterministic kernels provides the validation baseline.
"""

from .backend import backend_name, has_compiled
from .benchmarks import (
    BenchmarkSpec,
    build_problem,
    desk_preset,
    example1_advection,
    example2_burgers1d,
    example3_burgers2d,
    get_spec,
)
from .chaos import (
    ChaosBasis,
    MultiIndexSet,
    eval_basis,
    project_random_function,
    triple_product_tensor,
    weighted_pair_tensor,
)
from .errors import CapacityError, ConfigError, NumericalError
from .kernels import SmoothingKernel, kernel_gradient, kernel_value
from .mc import McCampaign, run_campaign, sample_germ, solve_deterministic
from .operators import (
    SphOperator,
    correction_matrix,
    second_derivative_nested,
    sph_derivative,
)
from .particles import (
    NeighborLists,
    ParticleSystem,
    brute_force_neighbors,
    neighbor_lists,
)
from .postprocess import MomentField, moments_from_coefficients, relative_l2
from .random_fields import (
    KLExpansion,
    SquaredExponentialKernel,
    fourier_random_field,
    kl_decompose,
    kl_realize,
)
from .solver import Numerics, Simulation, apply_dirichlet_bc, build_discretization
from .problems import StochasticProblem

__version__ = "0.1.0"
