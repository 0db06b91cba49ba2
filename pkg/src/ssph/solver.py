"""Galerkin-coupled time integration of the chaos coefficient system.

Projecting the governing equation onto each basis function turns the
stochastic problem into a coupled deterministic system for the coefficient
rows u_hat[l].  The coupling enters only through precomputed moment tensors:

  advection:   (u_hat_l)_t = sum_m E[c Phi_m Phi_l]          D_x u_hat_m
  Burgers 1D:  (u_hat_l)_t = -sum_{i,m} E[Phi_i Phi_m Phi_l] u_hat_i D_x u_hat_m
  Burgers 2D:  grouped advective contraction per component plus a viscous
               term from nested first derivatives, weighted by E[nu Phi Phi]

Time marching is a Heun predictor-corrector: an Euler predictor, boundary
enforcement, then a trapezoidal corrector.  In Lagrangian mode particles
advect with the mean-field row and neighbor structures are rebuilt on the
predicted positions; in Eulerian mode the geometry is frozen once.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .chaos import (
    ChaosBasis,
    project_random_function,
    triple_product_tensor,
    weighted_pair_tensor,
)
from .errors import ConfigError, NumericalError
from .kernels import SmoothingKernel
from .operators import SphOperator
from .particles import (
    DirichletGhostTopology,
    ParticleSystem,
    PeriodicTopology,
    dirichlet_grid,
    neighbor_lists,
    periodic_line,
)
from .problems import Advection1D, InviscidBurgers1D, StochasticProblem, ViscousBurgers2D


@dataclass(frozen=True)
class Numerics:
    """Discretization controls shared by the chaos and Monte Carlo solvers."""

    resolution: int          # particles (1D) or grid cells per axis (2D)
    dt: float
    t_final: float
    h_factor: float = 1.2
    radius_factor: float = 2.0
    order: int = 3           # total chaos degree
    kernel_family: str = "cubic"
    output_stride: int = 10
    stepper: str = "eulerian"
    corrected: bool = True
    cfl_factor: float | None = None  # None disables the guard
    quad_nodes: int = 0              # 0 = basis default

    def __post_init__(self):
        if self.resolution < 2:
            raise ConfigError("resolution must be at least 2")
        if not (self.dt > 0 and math.isfinite(self.dt)):
            raise ConfigError(f"time step must be positive, got {self.dt}")
        if self.t_final < 0:
            raise ConfigError("final time must be non-negative")
        if self.order < 0:
            raise ConfigError("chaos order must be non-negative")
        if self.stepper not in ("eulerian", "lagrangian"):
            raise ConfigError(f"unknown stepper {self.stepper!r}")
        if self.output_stride < 1:
            raise ConfigError("output stride must be positive")

    @property
    def n_steps(self) -> int:
        return int(round(self.t_final / self.dt))


@dataclass
class Discretization:
    """Particle geometry plus the precomputed derivative operator."""

    system: ParticleSystem
    kernel: SmoothingKernel
    op: SphOperator
    dx: float

    @property
    def n_real(self) -> int:
        return self.system.n_real

    @property
    def positions(self) -> np.ndarray:
        return self.system.positions


def build_discretization(problem: StochasticProblem, numerics: Numerics) -> Discretization:
    if problem.dim == 1:
        system, h = periodic_line(numerics.resolution, problem.length,
                                  numerics.h_factor, numerics.radius_factor)
    else:
        system, h = dirichlet_grid(numerics.resolution, numerics.h_factor,
                                   numerics.radius_factor, problem.length)
    kernel = SmoothingKernel(numerics.kernel_family, h, problem.dim)
    neighbors = neighbor_lists(system)
    op = SphOperator.build(system, neighbors, kernel)
    dx = problem.length / numerics.resolution
    return Discretization(system=system, kernel=kernel, op=op, dx=dx)


@dataclass
class CoefficientField:
    """Chaos coefficient rows for every velocity component.

    ``comps`` has shape (C, L, N) over all particles including ghosts;
    moment extraction reads only the real columns.
    """

    comps: np.ndarray
    t: float = 0.0
    step: int = 0

    def copy(self) -> "CoefficientField":
        return CoefficientField(self.comps.copy(), self.t, self.step)


# ---------------------------------------------------------------------------
# boundary enforcement
# ---------------------------------------------------------------------------


class PeriodicBoundary:
    """Minimum-image topology needs no field-side enforcement."""

    def refresh_solution(self, comps: np.ndarray) -> None:
        pass

    def pin(self, comps: np.ndarray) -> None:
        pass

    def refresh_derivative(self, rows: np.ndarray, axis: int) -> None:
        pass


class DirichletBoundary:
    """Wall pinning plus ghost refresh by reflection.

    Solution rows reflect antisymmetrically about the projected wall value
    (an odd number of mirrored axes flips about g1, an even number returns
    the source value), which enforces u = g1 at the wall.  First-derivative
    rows reflect with the parity of the derivative axis: even across the
    wall whose normal matches the axis, odd across the other.
    """

    def __init__(self, system: ParticleSystem, g1_rows: np.ndarray):
        if system.ghosts is None or system.wall_mask is None:
            raise ConfigError("Dirichlet boundary requires a ghost-band system")
        self.g1_rows = g1_rows  # (L,)
        self.n_real = system.n_real
        self.wall_idx = np.flatnonzero(system.wall_mask)
        ghosts = system.ghosts
        self.src = ghosts.source
        n = system.n
        self.ghost_idx = np.arange(self.n_real, n)
        odd = ghosts.mirror.sum(axis=1) % 2 == 1
        self.odd_idx = self.ghost_idx[odd]
        self.odd_src = self.src[odd]
        self.even_idx = self.ghost_idx[~odd]
        self.even_src = self.src[~odd]
        # axis-dependent parity for first-derivative fields
        self._deriv = []
        for axis in range(system.dim):
            flips = ghosts.mirror[:, [a for a in range(system.dim) if a != axis]]
            parity = np.where(flips.sum(axis=1) % 2 == 1, -1.0, 1.0)
            self._deriv.append(parity)

    def refresh_solution(self, comps: np.ndarray) -> None:
        shift = 2.0 * self.g1_rows[:, None]
        comps[:, :, self.odd_idx] = shift - comps[:, :, self.odd_src]
        comps[:, :, self.even_idx] = comps[:, :, self.even_src]

    def pin(self, comps: np.ndarray) -> None:
        comps[:, :, self.wall_idx] = self.g1_rows[None, :, None]

    def refresh_derivative(self, rows: np.ndarray, axis: int) -> None:
        rows[:, self.ghost_idx] = self._deriv[axis][None, :] * rows[:, self.src]


# ---------------------------------------------------------------------------
# right-hand sides
# ---------------------------------------------------------------------------


class AdvectionRhs:
    def __init__(self, problem: StochasticProblem, basis: ChaosBasis, numerics: Numerics):
        nodes = numerics.quad_nodes or None
        self.g2 = problem.operator.speed.pair_tensor(basis, n_nodes=nodes).values
        self.corrected = numerics.corrected

    def __call__(self, comps: np.ndarray, op: SphOperator, bc) -> np.ndarray:
        d = op.derivative(comps[0], 0, corrected=self.corrected)
        return np.einsum("ml,mj->lj", self.g2, d)[None, :, :]


class Burgers1dRhs:
    def __init__(self, problem: StochasticProblem, basis: ChaosBasis, numerics: Numerics):
        self.g3 = triple_product_tensor(basis, n_nodes=numerics.quad_nodes or None).values
        self.corrected = numerics.corrected

    def __call__(self, comps: np.ndarray, op: SphOperator, bc) -> np.ndarray:
        u = comps[0]
        d = op.derivative(u, 0, corrected=self.corrected)
        out = -np.einsum("iml,ij,mj->lj", self.g3, u, d, optimize=True)
        return out[None, :, :]


class Burgers2dRhs:
    """Grouped or standard advective contraction plus nested viscous term."""

    def __init__(self, problem: StochasticProblem, basis: ChaosBasis, numerics: Numerics,
                 n_real: int, n_total: int):
        op2d: ViscousBurgers2D = problem.operator
        self.g3 = triple_product_tensor(basis, n_nodes=numerics.quad_nodes or None).values
        self.form = op2d.advection_form
        self.corrected = numerics.corrected
        # viscosity fields are defined on the real grid; ghost-column RHS
        # values are discarded after each substep, so pad them with zeros
        self.nu_mean = _pad_real(op2d.viscosity.mean_field(n_real), n_total)
        self.nu_modes = []
        for dim, mode in op2d.viscosity.mode_fields():
            def linear(pts, _d=dim):
                return pts[:, _d]

            t_k = weighted_pair_tensor(basis, linear, active_dims=(dim,)).values
            self.nu_modes.append((_pad_real(mode, n_total), t_k))

    def _laplacian(self, rows: np.ndarray, op: SphOperator, bc) -> np.ndarray:
        out = np.zeros_like(rows)
        for axis in range(2):
            first = op.derivative(rows, axis, corrected=self.corrected)
            bc.refresh_derivative(first, axis)
            out += op.derivative(first, axis, corrected=self.corrected)
        return out

    def __call__(self, comps: np.ndarray, op: SphOperator, bc) -> np.ndarray:
        u, v = comps[0], comps[1]
        out = np.empty_like(comps)
        if self.form == "grouped":
            s = u + v
            du = op.derivative(u, 0, corrected=self.corrected)
            dv = op.derivative(v, 1, corrected=self.corrected)
            out[0] = -np.einsum("iml,ij,mj->lj", self.g3, s, du, optimize=True)
            out[1] = -np.einsum("iml,ij,mj->lj", self.g3, s, dv, optimize=True)
        else:
            dux = op.derivative(u, 0, corrected=self.corrected)
            duy = op.derivative(u, 1, corrected=self.corrected)
            dvx = op.derivative(v, 0, corrected=self.corrected)
            dvy = op.derivative(v, 1, corrected=self.corrected)
            out[0] = -(np.einsum("iml,ij,mj->lj", self.g3, u, dux, optimize=True)
                       + np.einsum("iml,ij,mj->lj", self.g3, v, duy, optimize=True))
            out[1] = -(np.einsum("iml,ij,mj->lj", self.g3, u, dvx, optimize=True)
                       + np.einsum("iml,ij,mj->lj", self.g3, v, dvy, optimize=True))
        for c in range(2):
            lap = self._laplacian(comps[c], op, bc)
            out[c] += self.nu_mean[None, :] * lap
            for mode, t_k in self.nu_modes:
                out[c] += mode[None, :] * np.einsum("ml,mj->lj", t_k, lap)
        return out


def _pad_real(values: np.ndarray, n_total: int) -> np.ndarray:
    values = np.asarray(values, dtype=float)
    if values.shape[0] == n_total:
        return values
    out = np.zeros(n_total)
    out[: values.shape[0]] = values
    return out


def make_rhs(problem: StochasticProblem, basis: ChaosBasis, numerics: Numerics,
             n_real: int, n_total: int):
    if isinstance(problem.operator, Advection1D):
        return AdvectionRhs(problem, basis, numerics)
    if isinstance(problem.operator, InviscidBurgers1D):
        return Burgers1dRhs(problem, basis, numerics)
    if isinstance(problem.operator, ViscousBurgers2D):
        return Burgers2dRhs(problem, basis, numerics, n_real, n_total)
    raise ConfigError(f"no right-hand side for operator {problem.operator!r}")


# ---------------------------------------------------------------------------
# initial and boundary data
# ---------------------------------------------------------------------------


def project_initial_condition(problem: StochasticProblem, basis: ChaosBasis,
                              disc: Discretization) -> CoefficientField:
    """Chaos coefficients of the initial data on the particle grid."""
    n = disc.system.n
    n_real = disc.n_real
    comps = np.zeros((problem.operator.components, len(basis), n))
    real_pos = disc.positions[:n_real]
    for c, ic in enumerate(problem.ics):
        comps[c, :, :n_real] = ic.project(basis, real_pos)
    return CoefficientField(comps=comps, t=0.0, step=0)


def dirichlet_rows(problem: StochasticProblem, basis: ChaosBasis) -> np.ndarray:
    """Projected wall-value coefficients E[g1 Phi_l]."""
    g1 = problem.dirichlet_value
    if hasattr(g1, "coefficients"):
        return g1.coefficients(basis)
    dims = tuple(g1.germ_dims)
    return project_random_function(
        basis, lambda pts: np.array([g1.realize(xi) for xi in pts]),
        active_dims=dims if dims else (0,),
    )


def make_boundary(problem: StochasticProblem, basis: ChaosBasis, disc: Discretization):
    if isinstance(disc.system.topology, PeriodicTopology):
        return PeriodicBoundary()
    if isinstance(disc.system.topology, DirichletGhostTopology):
        return DirichletBoundary(disc.system, dirichlet_rows(problem, basis))
    raise ConfigError("open topology has no boundary enforcement rule")


def apply_dirichlet_bc(field: CoefficientField, problem: StochasticProblem,
                       basis: ChaosBasis, disc: Discretization) -> CoefficientField:
    """Pin wall rows to the projected wall values and refresh the ghost band."""
    bc = make_boundary(problem, basis, disc)
    out = field.copy()
    bc.pin(out.comps)
    bc.refresh_solution(out.comps)
    return out


# ---------------------------------------------------------------------------
# time stepping
# ---------------------------------------------------------------------------


def heun_step(y: np.ndarray, rhs, dt: float) -> np.ndarray:
    """One predictor-corrector step for a plain ODE system (no boundaries)."""
    k1 = rhs(y)
    k2 = rhs(y + dt * k1)
    return y + 0.5 * dt * (k1 + k2)


@dataclass
class Trajectory:
    """Recorded coefficient snapshots on the real particles."""

    times: np.ndarray
    steps: np.ndarray
    coords: np.ndarray          # (J_real, d), initial positions
    coeffs: np.ndarray          # (n_snap, C, L, J_real)
    final_positions: np.ndarray | None = None


class Simulation:
    """One stochastic-Galerkin solve on a fixed problem and discretization."""

    def __init__(self, problem: StochasticProblem, numerics: Numerics,
                 basis: ChaosBasis | None = None, disc: Discretization | None = None,
                 rhs_override=None):
        self.problem = problem
        self.numerics = numerics
        self.basis = basis or ChaosBasis.total_degree(problem.germ_dim, numerics.order)
        if self.basis.dim < problem.germ_dim:
            raise ConfigError("chaos basis covers fewer germ dimensions than the problem")
        self.disc = disc or build_discretization(problem, numerics)
        if numerics.stepper == "lagrangian" and problem.boundary_kind == "dirichlet":
            raise ConfigError("lagrangian stepping is only supported on periodic domains")
        self.bc = make_boundary(problem, self.basis, self.disc)
        self.rhs = rhs_override or make_rhs(problem, self.basis, numerics,
                                            self.disc.n_real, self.disc.system.n)
        self.forcing = None
        if problem.forcing is not None:
            self.forcing = np.asarray(problem.forcing(self.disc.positions), dtype=float)

    # -- helpers ----------------------------------------------------------

    def initial_field(self) -> CoefficientField:
        field = project_initial_condition(self.problem, self.basis, self.disc)
        self.bc.pin(field.comps)
        self.bc.refresh_solution(field.comps)
        return field

    def _eval_rhs(self, comps: np.ndarray, op: SphOperator) -> np.ndarray:
        out = self.rhs(comps, op, self.bc)
        if self.forcing is not None:
            out = out + self.forcing
        return out

    def _cfl_check(self, comps: np.ndarray, step: int) -> None:
        factor = self.numerics.cfl_factor
        if factor is None:
            return
        speed = np.sqrt(np.sum(comps[:, 0, :] ** 2, axis=0))
        if comps.shape[1] > 1:
            spread = np.sqrt(np.sum(comps[:, 1:, :] ** 2, axis=(0, 1)))
        else:
            spread = np.zeros_like(speed)
        scale = float(np.max(speed + 3.0 * spread))
        if scale <= 0.0:
            return
        limit = factor * self.disc.dx / scale
        if self.numerics.dt > limit:
            raise NumericalError(
                f"CFL guard rejected step {step}: dt={self.numerics.dt} exceeds "
                f"{limit:.6g} (factor {factor}, dx {self.disc.dx:.6g}, "
                f"signal scale {scale:.6g})"
            )

    def _check_finite(self, comps: np.ndarray, step: int) -> None:
        if not np.all(np.isfinite(comps)):
            raise NumericalError(f"non-finite coefficients after step {step}")

    # -- main loop --------------------------------------------------------

    def run(self) -> Trajectory:
        numerics = self.numerics
        n_steps = numerics.n_steps
        stride = numerics.output_stride
        field = self.initial_field()
        n_real = self.disc.n_real

        times, steps, snaps = [], [], []

        def record(f: CoefficientField):
            times.append(f.t)
            steps.append(f.step)
            snaps.append(f.comps[:, :, :n_real].copy())

        record(field)
        coords = self.disc.positions[:n_real].copy()

        lagrangian = numerics.stepper == "lagrangian"
        disc = self.disc
        dt = numerics.dt

        for step in range(n_steps):
            comps = field.comps
            self._cfl_check(comps, step)
            if lagrangian and step > 0:
                disc = self._rebuild(disc)
            k1 = self._eval_rhs(comps, disc.op)
            pred = comps + dt * k1
            self.bc.pin(pred)
            self.bc.refresh_solution(pred)
            if lagrangian:
                pred_pos = disc.positions + dt * _mean_velocity(comps, disc.system.dim)
                pred_disc = self._rebuild(disc, pred_pos)
            else:
                pred_disc = disc
            k2 = self._eval_rhs(pred, pred_disc.op)
            new = comps + 0.5 * dt * (k1 + k2)
            self.bc.pin(new)
            self.bc.refresh_solution(new)
            if lagrangian:
                new_pos = disc.positions + 0.5 * dt * (
                    _mean_velocity(comps, disc.system.dim)
                    + _mean_velocity(new, disc.system.dim)
                )
                disc = self._rebuild(disc, new_pos)
            field = CoefficientField(comps=new, t=(step + 1) * dt, step=step + 1)
            self._check_finite(field.comps, field.step)
            if field.step % stride == 0 or field.step == n_steps:
                if not steps or steps[-1] != field.step:
                    record(field)

        self.disc_final = disc
        return Trajectory(
            times=np.asarray(times),
            steps=np.asarray(steps, dtype=np.int64),
            coords=coords,
            coeffs=np.asarray(snaps),
            final_positions=disc.positions[:n_real].copy() if lagrangian else None,
        )

    def _rebuild(self, disc: Discretization, positions=None) -> Discretization:
        system = disc.system if positions is None else disc.system.with_positions(positions)
        neighbors = neighbor_lists(system)
        op = SphOperator.build(system, neighbors, disc.kernel)
        return Discretization(system=system, kernel=disc.kernel, op=op, dx=disc.dx)


def _mean_velocity(comps: np.ndarray, dim: int) -> np.ndarray:
    """Particle advection velocity from the mean-field rows; (N, dim)."""
    n = comps.shape[2]
    vel = np.zeros((n, dim))
    for c in range(min(dim, comps.shape[0])):
        vel[:, c] = comps[c, 0, :]
    return vel
