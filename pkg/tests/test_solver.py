import numpy as np
import pytest

from ssph.chaos import ChaosBasis
from ssph.errors import ConfigError, NumericalError
from ssph.problems import (
    Advection1D,
    AffineFieldIC,
    DeterministicIC,
    DeterministicScalar,
    DeterministicViscosity,
    GaussianScalar,
    InviscidBurgers1D,
    RandomSineIC,
    StochasticProblem,
    ViscousBurgers2D,
)
from ssph.solver import (
    Burgers2dRhs,
    Numerics,
    Simulation,
    apply_dirichlet_bc,
    build_discretization,
    dirichlet_rows,
    heun_step,
    make_rhs,
    project_initial_condition,
)

SEED = 20250810


def sine_ic(pos):
    return np.sin(2 * np.pi * pos[:, 0])


def zero_ic(pos):
    return np.zeros(pos.shape[0])


def advection_problem(std_c=0.1, germ=1):
    return StochasticProblem(operator=Advection1D(GaussianScalar(0.06, std_c, dim=0)),
                             ics=(DeterministicIC(sine_ic),), germ_dim=germ)


def test_heun_step_on_scalar_ode():
    """One step on u' = -lambda u gives exactly 1 - z + z^2/2 times u."""
    lam, dt = 1.3, 0.01
    u = np.array([[1.0]])
    out = heun_step(u, lambda y: -lam * y, dt)
    z = lam * dt
    assert abs(out[0, 0] - (1 - z + z * z / 2)) < 1e-14


def test_project_deterministic_ic():
    problem = advection_problem()
    numerics = Numerics(resolution=64, dt=0.001, t_final=0.01, order=3)
    disc = build_discretization(problem, numerics)
    basis = ChaosBasis.total_degree(1, 3)
    field = project_initial_condition(problem, basis, disc)
    x = disc.positions[:, 0]
    assert np.allclose(field.comps[0, 0], np.sin(2 * np.pi * x))
    assert np.abs(field.comps[0, 1:]).max() == 0.0


def test_project_random_amplitude_ic():
    """u0 = alpha sin(2 pi x) with alpha ~ N(0.25, 0.1): two exact rows."""
    ic = RandomSineIC(GaussianScalar(0.25, 0.1, dim=1),
                      GaussianScalar(2 * np.pi, 0.0, dim=2))
    problem = StochasticProblem(
        operator=Advection1D(GaussianScalar(0.06, 0.1, dim=0)),
        ics=(ic,), germ_dim=3)
    numerics = Numerics(resolution=64, dt=0.001, t_final=0.01, order=3)
    disc = build_discretization(problem, numerics)
    basis = ChaosBasis.total_degree(3, 3)
    rows = project_initial_condition(problem, basis, disc).comps[0]
    target = np.sin(2 * np.pi * disc.positions[:, 0])
    assert np.abs(rows[0] - 0.25 * target).max() < 1e-12
    pos = basis.index_set.position((0, 1, 0))
    assert np.abs(rows[pos] - 0.1 * target).max() < 1e-12
    keep = np.ones(len(basis), dtype=bool)
    keep[[0, pos]] = False
    assert np.abs(rows[keep]).max() < 1e-12


def test_advection_rhs_matches_hand_assembled_coupling():
    """q = 1 Gaussian speed: the 2x2 coupled system is
    (u0)_t = cbar D u0 + sig D u1 ; (u1)_t = sig D u0 + cbar D u1."""
    problem = advection_problem()
    numerics = Numerics(resolution=128, dt=0.001, t_final=0.01, order=1)
    disc = build_discretization(problem, numerics)
    basis = ChaosBasis.total_degree(1, 1)
    rhs = make_rhs(problem, basis, numerics, disc.n_real, disc.system.n)
    rng = np.random.default_rng(2)
    comps = rng.standard_normal((1, 2, disc.system.n))
    out = rhs(comps, disc.op, None)
    d0 = disc.op.derivative(comps[0, 0], 0, corrected=True)
    d1 = disc.op.derivative(comps[0, 1], 0, corrected=True)
    cbar, sig = 0.06, 0.1
    assert np.allclose(out[0, 0], cbar * d0 + sig * d1, atol=1e-13)
    assert np.allclose(out[0, 1], sig * d0 + cbar * d1, atol=1e-13)


def test_advection_rhs_decouples_without_variance():
    """sigma_c = 0: row zero evolves as plain deterministic advection."""
    problem = advection_problem(std_c=0.0)
    numerics = Numerics(resolution=128, dt=0.001, t_final=0.01, order=3)
    disc = build_discretization(problem, numerics)
    basis = ChaosBasis.total_degree(1, 3)
    rhs = make_rhs(problem, basis, numerics, disc.n_real, disc.system.n)
    u = np.sin(2 * np.pi * disc.positions[:, 0])
    comps = np.zeros((1, len(basis), disc.system.n))
    comps[0, 0] = u
    out = rhs(comps, disc.op, None)
    expected = 0.06 * disc.op.derivative(u, 0, corrected=True)
    assert np.array_equal(out[0, 0], expected)
    assert np.abs(out[0, 1:]).max() == 0.0


def test_rhs_of_constant_field_is_zero():
    problem = advection_problem()
    numerics = Numerics(resolution=64, dt=0.001, t_final=0.01, order=2)
    disc = build_discretization(problem, numerics)
    basis = ChaosBasis.total_degree(1, 2)
    rhs = make_rhs(problem, basis, numerics, disc.n_real, disc.system.n)
    comps = np.full((1, len(basis), disc.system.n), 2.5)
    assert np.all(rhs(comps, disc.op, None) == 0.0)


def test_advection_rhs_is_linear():
    problem = advection_problem()
    numerics = Numerics(resolution=64, dt=0.001, t_final=0.01, order=3)
    disc = build_discretization(problem, numerics)
    basis = ChaosBasis.total_degree(1, 3)
    rhs = make_rhs(problem, basis, numerics, disc.n_real, disc.system.n)
    rng = np.random.default_rng(3)
    u = rng.standard_normal((1, len(basis), disc.system.n))
    w = rng.standard_normal((1, len(basis), disc.system.n))
    lhs = rhs(2.0 * u + 0.5 * w, disc.op, None)
    rhs_sum = 2.0 * rhs(u, disc.op, None) + 0.5 * rhs(w, disc.op, None)
    assert np.abs(lhs - rhs_sum).max() < 1e-12 * max(1.0, np.abs(lhs).max())


def burgers1d_problem():
    ic = RandomSineIC(GaussianScalar(0.25, 0.1, dim=0),
                      GaussianScalar(2 * np.pi, 0.1, dim=1))
    return StochasticProblem(operator=InviscidBurgers1D(), ics=(ic,), germ_dim=2)


def test_burgers_rhs_deterministic_reduction():
    """Only row zero populated: the RHS collapses to -u D(u)."""
    problem = burgers1d_problem()
    numerics = Numerics(resolution=128, dt=0.001, t_final=0.01, order=2)
    disc = build_discretization(problem, numerics)
    basis = ChaosBasis.total_degree(2, 2)
    rhs = make_rhs(problem, basis, numerics, disc.n_real, disc.system.n)
    u = 0.25 * np.sin(2 * np.pi * disc.positions[:, 0])
    comps = np.zeros((1, len(basis), disc.system.n))
    comps[0, 0] = u
    out = rhs(comps, disc.op, None)
    expected = -u * disc.op.derivative(u, 0, corrected=True)
    assert np.abs(out[0, 0] - expected).max() < 1e-12
    assert np.abs(out[0, 1:]).max() < 1e-12


def test_burgers_rhs_linearized_transport():
    """A small perturbation row feels the linearized operator
    -(u0 D u1 + u1 D u0) to first order."""
    problem = burgers1d_problem()
    numerics = Numerics(resolution=128, dt=0.001, t_final=0.01, order=1)
    disc = build_discretization(problem, numerics)
    basis = ChaosBasis.total_degree(2, 1)
    rhs = make_rhs(problem, basis, numerics, disc.n_real, disc.system.n)
    x = disc.positions[:, 0]
    u0 = 0.25 * np.sin(2 * np.pi * x)
    u1 = 0.05 * np.cos(2 * np.pi * x)
    eps = 1e-6
    comps = np.zeros((1, len(basis), disc.system.n))
    comps[0, 0] = u0
    comps[0, 1] = eps * u1
    out = rhs(comps, disc.op, None)
    d = lambda f: disc.op.derivative(f, 0, corrected=True)
    linearized = -(u0 * d(u1) + u1 * d(u0))
    assert np.abs(out[0, 1] / eps - linearized).max() < 1e-4


def test_burgers_rhs_spatially_constant_rows():
    problem = burgers1d_problem()
    numerics = Numerics(resolution=64, dt=0.001, t_final=0.01, order=2)
    disc = build_discretization(problem, numerics)
    basis = ChaosBasis.total_degree(2, 2)
    rhs = make_rhs(problem, basis, numerics, disc.n_real, disc.system.n)
    comps = np.tile(np.arange(1.0, len(basis) + 1.0)[None, :, None],
                    (1, 1, disc.system.n))
    assert np.all(rhs(comps, disc.op, None) == 0.0)


def burgers2d_problem(nu=0.05):
    return StochasticProblem(
        operator=ViscousBurgers2D(DeterministicViscosity(nu)),
        ics=(DeterministicIC(lambda p: np.sin(2 * np.pi * p[:, 0])
                             * np.sin(2 * np.pi * p[:, 1])),
             DeterministicIC(zero_ic)),
        germ_dim=1)


def test_burgers2d_zero_field_rhs():
    problem = burgers2d_problem()
    numerics = Numerics(resolution=16, dt=0.001, t_final=0.01, h_factor=1.6, order=1)
    sim = Simulation(problem, numerics, basis=ChaosBasis.total_degree(1, 1))
    comps = np.zeros((2, 2, sim.disc.system.n))
    assert np.all(sim.rhs(comps, sim.disc.op, sim.bc) == 0.0)


def test_burgers2d_pure_diffusion_decay():
    """With the advective terms disabled the lowest mode decays at the heat
    rate -8 pi^2 nu within 5 percent."""
    problem = burgers2d_problem()
    numerics = Numerics(resolution=48, dt=0.001, t_final=0.01, h_factor=1.6,
                        order=0, output_stride=1)
    basis = ChaosBasis.total_degree(1, 0)

    class DiffusionOnly(Burgers2dRhs):
        def __call__(self, comps, op, bc):
            out = np.zeros_like(comps)
            for c in range(2):
                lap = self._laplacian(comps[c], op, bc)
                out[c] += self.nu_mean[None, :] * lap
            return out

    sim = Simulation(problem, numerics, basis=basis)
    sim.rhs = DiffusionOnly(problem, basis, numerics, sim.disc.n_real,
                            sim.disc.system.n)
    traj = sim.run()
    norms = np.linalg.norm(traj.coeffs[:, 0, 0, :], axis=1)
    rate = np.polyfit(traj.times, np.log(norms), 1)[0]
    target = -8 * np.pi**2 * 0.05
    assert abs(rate - target) / abs(target) < 0.05


def test_burgers2d_standard_advection_variant():
    """The standard-advection flag contracts u d/dx + v d/dy instead of the
    grouped form; with v = 0 both coincide."""
    problem = burgers2d_problem()
    std = StochasticProblem(
        operator=ViscousBurgers2D(DeterministicViscosity(0.05),
                                  advection_form="standard"),
        ics=problem.ics, germ_dim=1)
    numerics = Numerics(resolution=12, dt=0.001, t_final=0.002, h_factor=1.6,
                        order=0, output_stride=1)
    t1 = Simulation(problem, numerics, basis=ChaosBasis.total_degree(1, 0)).run()
    t2 = Simulation(std, numerics, basis=ChaosBasis.total_degree(1, 0)).run()
    assert np.allclose(t1.coeffs, t2.coeffs, atol=1e-14)


def test_step_order_via_richardson():
    """Halving dt on the advection benchmark shows second-order accuracy."""
    problem = advection_problem()
    errs = []
    dts = [0.004, 0.002, 0.001]
    finals = []
    for dt in dts:
        numerics = Numerics(resolution=128, dt=dt, t_final=0.1, order=3,
                            output_stride=10**6)
        traj = Simulation(problem, numerics).run()
        finals.append(traj.coeffs[-1])
    e1 = np.linalg.norm(finals[0] - finals[1])
    e2 = np.linalg.norm(finals[1] - finals[2])
    order = np.log2(e1 / e2)
    assert order >= 1.9


def test_zero_rhs_leaves_state_unchanged():
    problem = StochasticProblem(operator=Advection1D(DeterministicScalar(0.0)),
                                ics=(DeterministicIC(sine_ic),), germ_dim=1)
    numerics = Numerics(resolution=32, dt=0.01, t_final=0.05, order=2,
                        output_stride=1)
    traj = Simulation(problem, numerics).run()
    assert np.array_equal(traj.coeffs[0], traj.coeffs[-1])


def test_cfl_guard_rejects_oversized_step():
    problem = burgers1d_problem()
    numerics = Numerics(resolution=64, dt=0.05, t_final=0.1, order=2,
                        cfl_factor=0.25)
    sim = Simulation(problem, numerics)
    with pytest.raises(NumericalError) as err:
        sim.run()
    assert "CFL" in str(err.value)
    assert "dt=0.05" in str(err.value)


def test_periodic_advection_conserves_row_integrals():
    """sum_j V_j u_l[j] is conserved for every row under periodic advection."""
    ic = RandomSineIC(GaussianScalar(0.25, 0.1, dim=1),
                      GaussianScalar(2 * np.pi, 0.1, dim=2))
    problem = StochasticProblem(
        operator=Advection1D(GaussianScalar(0.06, 0.1, dim=0)),
        ics=(ic,), germ_dim=3)
    numerics = Numerics(resolution=128, dt=0.002, t_final=0.2, order=2,
                        output_stride=20)
    traj = Simulation(problem, numerics).run()
    vol = 1.0 / 128
    integrals = traj.coeffs[:, 0, :, :].sum(axis=2) * vol
    drift = np.abs(integrals - integrals[0]).max()
    scale = max(np.abs(integrals[0]).max(), 1e-3)
    assert drift / scale < 1e-6


def test_step_determinism():
    problem = advection_problem()
    numerics = Numerics(resolution=64, dt=0.002, t_final=0.05, order=3)
    t1 = Simulation(problem, numerics).run()
    t2 = Simulation(problem, numerics).run()
    assert np.array_equal(t1.coeffs, t2.coeffs)


def test_lagrangian_positions_advance_with_mean_row():
    """Algorithm positions move by dt times the mean-field row (predictor)
    and the trapezoidal average (corrector), wrapping periodically."""
    problem = StochasticProblem(operator=Advection1D(DeterministicScalar(0.0)),
                                ics=(DeterministicIC(lambda p: np.full(p.shape[0], 0.3)),),
                                germ_dim=1)
    numerics = Numerics(resolution=16, dt=0.01, t_final=0.03, order=0,
                        stepper="lagrangian", output_stride=1)
    sim = Simulation(problem, numerics)
    traj = sim.run()
    # zero speed advection: field constant, positions drift by u0 = 0.3
    x0 = traj.coords[:, 0]
    xf = traj.final_positions[:, 0]
    expected = np.mod(x0 + 0.3 * 0.03, 1.0)
    assert np.abs(xf - expected).max() < 1e-12
    assert np.all((xf >= 0) & (xf < 1))


def test_lagrangian_dirichlet_combination_refused():
    problem = burgers2d_problem()
    numerics = Numerics(resolution=8, dt=0.001, t_final=0.01, h_factor=1.6,
                        order=0, stepper="lagrangian")
    with pytest.raises(ConfigError):
        Simulation(problem, numerics, basis=ChaosBasis.total_degree(1, 0))


# ---------------------------------------------------------------------------
# Dirichlet boundary handling
# ---------------------------------------------------------------------------


def dirichlet_setup(g1):
    problem = StochasticProblem(
        operator=ViscousBurgers2D(DeterministicViscosity(0.05)),
        ics=(DeterministicIC(lambda p: np.sin(2 * np.pi * p[:, 0])
                             * np.sin(2 * np.pi * p[:, 1])),
             DeterministicIC(zero_ic)),
        germ_dim=2, dirichlet_value=g1)
    numerics = Numerics(resolution=12, dt=0.001, t_final=0.01, h_factor=1.6, order=2)
    disc = build_discretization(problem, numerics)
    basis = ChaosBasis.total_degree(2, 2)
    return problem, basis, disc


def test_dirichlet_homogeneous_rows():
    problem, basis, disc = dirichlet_setup(DeterministicScalar(0.0))
    field = project_initial_condition(problem, basis, disc)
    field.comps[:] = np.random.default_rng(5).standard_normal(field.comps.shape)
    out = apply_dirichlet_bc(field, problem, basis, disc)
    wall = np.flatnonzero(disc.system.wall_mask)
    assert np.all(out.comps[:, :, wall] == 0.0)


def test_dirichlet_constant_value_rows():
    problem, basis, disc = dirichlet_setup(DeterministicScalar(0.7))
    field = project_initial_condition(problem, basis, disc)
    out = apply_dirichlet_bc(field, problem, basis, disc)
    wall = np.flatnonzero(disc.system.wall_mask)
    assert np.allclose(out.comps[:, 0, wall], 0.7)
    assert np.all(out.comps[:, 1:, wall] == 0.0)


def test_dirichlet_random_value_rows():
    """g1 = k xi_1 puts k in the first-degree row at the wall."""
    problem, basis, disc = dirichlet_setup(GaussianScalar(0.0, 0.4, dim=0))
    field = project_initial_condition(problem, basis, disc)
    out = apply_dirichlet_bc(field, problem, basis, disc)
    wall = np.flatnonzero(disc.system.wall_mask)
    pos = basis.index_set.position((1, 0))
    assert np.allclose(out.comps[:, pos, wall], 0.4)
    assert np.all(out.comps[:, 0, wall] == 0.0)


def test_ghost_values_reflect_antisymmetrically():
    problem, basis, disc = dirichlet_setup(DeterministicScalar(0.0))
    field = project_initial_condition(problem, basis, disc)
    out = apply_dirichlet_bc(field, problem, basis, disc)
    ghosts = disc.system.ghosts
    n_real = disc.n_real
    odd = ghosts.mirror.sum(axis=1) % 2 == 1
    src = ghosts.source
    ghost_vals = out.comps[0, 0, n_real:]
    src_vals = out.comps[0, 0, src]
    assert np.allclose(ghost_vals[odd], -src_vals[odd])
    assert np.allclose(ghost_vals[~odd], src_vals[~odd])
