"""Problem definitions: operators, random inputs and their germ layout.

All randomness is expressed through a shared germ of independent standard
normal variables.  Every random input (scalar parameter, random-field
initial condition, viscosity field) owns a fixed set of germ coordinates,
knows how to realize itself for a concrete germ draw, and how to express
itself in a chaos basis over the full germ.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .chaos import ChaosBasis, CouplingTensor, project_field, weighted_pair_tensor
from .errors import ConfigError

VISCOSITY_FLOOR = 1e-6


# ---------------------------------------------------------------------------
# random scalars
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class DeterministicScalar:
    value: float

    germ_dims: tuple = ()

    def realize(self, xi: np.ndarray) -> float:
        return self.value

    @property
    def mean_value(self) -> float:
        return self.value

    def pair_tensor(self, basis: ChaosBasis, n_nodes=None) -> CouplingTensor:
        return CouplingTensor.from_dense(self.value * np.eye(len(basis)))

    def coefficients(self, basis: ChaosBasis) -> np.ndarray:
        out = np.zeros(len(basis))
        out[0] = self.value
        return out

    def with_zero_variance(self) -> "DeterministicScalar":
        return self


@dataclass(frozen=True)
class GaussianScalar:
    """mean + std * xi_dim; the second parameter is the standard deviation."""

    mean: float
    std: float
    dim: int

    @property
    def germ_dims(self) -> tuple:
        return (self.dim,)

    @property
    def mean_value(self) -> float:
        return self.mean

    def realize(self, xi: np.ndarray) -> float:
        return self.mean + self.std * float(xi[self.dim])

    def _eval(self, pts: np.ndarray) -> np.ndarray:
        return self.mean + self.std * pts[:, self.dim]

    def pair_tensor(self, basis: ChaosBasis, n_nodes=None) -> CouplingTensor:
        if self.std == 0.0:
            # a zero-variance input is exactly deterministic; skip quadrature
            # so degenerate problems decouple bitwise
            return DeterministicScalar(self.mean).pair_tensor(basis)
        return weighted_pair_tensor(basis, self._eval, active_dims=(self.dim,),
                                    n_nodes=n_nodes)

    def coefficients(self, basis: ChaosBasis) -> np.ndarray:
        out = np.zeros(len(basis))
        out[0] = self.mean
        if self.std != 0.0:
            e = np.zeros(basis.dim, dtype=np.int64)
            e[self.dim] = 1
            out[basis.index_set.position(e)] = self.std
        return out

    def with_zero_variance(self) -> "GaussianScalar":
        return replace(self, std=0.0)


@dataclass(frozen=True)
class LognormalScalar:
    """exp(mu_log + sigma_log * xi_dim) with moments matched to (mean, std).

    ``mean`` and ``std`` are the real-space first two moments; the log-space
    parameters are solved from the lognormal moment identities so Gaussian
    and lognormal variants of a parameter are directly comparable.
    """

    mean: float
    std: float
    dim: int

    def __post_init__(self):
        if self.mean <= 0:
            raise ConfigError("lognormal mean must be positive")

    @property
    def germ_dims(self) -> tuple:
        return (self.dim,)

    @property
    def mean_value(self) -> float:
        return self.mean

    @property
    def sigma_log(self) -> float:
        if self.std == 0.0:
            return 0.0
        return math.sqrt(math.log(1.0 + (self.std / self.mean) ** 2))

    @property
    def mu_log(self) -> float:
        return math.log(self.mean) - 0.5 * self.sigma_log**2

    def realize(self, xi: np.ndarray) -> float:
        if self.std == 0.0:
            return self.mean
        return math.exp(self.mu_log + self.sigma_log * float(xi[self.dim]))

    def _eval(self, pts: np.ndarray) -> np.ndarray:
        return np.exp(self.mu_log + self.sigma_log * pts[:, self.dim])

    def pair_tensor(self, basis: ChaosBasis, n_nodes=None) -> CouplingTensor:
        if self.std == 0.0:
            return DeterministicScalar(self.mean).pair_tensor(basis)
        return weighted_pair_tensor(basis, self._eval, active_dims=(self.dim,),
                                    n_nodes=n_nodes)

    def with_zero_variance(self) -> "LognormalScalar":
        return replace(self, std=0.0)


ScalarModel = DeterministicScalar | GaussianScalar | LognormalScalar


# ---------------------------------------------------------------------------
# initial conditions (defined on the real particle grid)
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class DeterministicIC:
    """Fixed initial field, given as a callable of positions."""

    fn: object  # callable (J, d) -> (J,)

    germ_dims: tuple = ()

    def realize(self, xi: np.ndarray, positions: np.ndarray) -> np.ndarray:
        return np.asarray(self.fn(positions), dtype=float)

    def project(self, basis: ChaosBasis, positions: np.ndarray) -> np.ndarray:
        rows = np.zeros((len(basis), positions.shape[0]))
        rows[0] = self.realize(None, positions)
        return rows

    def with_zero_variance(self) -> "DeterministicIC":
        return self


@dataclass(frozen=True)
class RandomSineIC:
    """alpha * sin(beta * x) with random amplitude and wavenumber."""

    amplitude: ScalarModel
    wavenumber: ScalarModel

    @property
    def germ_dims(self) -> tuple:
        return tuple(self.amplitude.germ_dims) + tuple(self.wavenumber.germ_dims)

    def realize(self, xi: np.ndarray, positions: np.ndarray) -> np.ndarray:
        a = self.amplitude.realize(xi)
        b = self.wavenumber.realize(xi)
        return a * np.sin(b * positions[:, 0])

    def project(self, basis: ChaosBasis, positions: np.ndarray) -> np.ndarray:
        x = positions[:, 0]

        def samples(pts):
            a = np.array([self.amplitude.realize(xi) for xi in pts])
            b = np.array([self.wavenumber.realize(xi) for xi in pts])
            return a[:, None] * np.sin(b[:, None] * x[None, :])

        return project_field(basis, samples, active_dims=self.germ_dims)

    def with_zero_variance(self) -> "RandomSineIC":
        return RandomSineIC(self.amplitude.with_zero_variance(),
                            self.wavenumber.with_zero_variance())


@dataclass(frozen=True)
class AffineFieldIC:
    """mean(x) + sum_k modes[k](x) * xi_{dims[k]}, e.g. a truncated KL field.

    ``modes`` rows already include the sqrt(eigenvalue) scaling.  Affine
    germ dependence makes the chaos projection exact: the mean maps to the
    constant basis function, each mode to its first-degree function.
    """

    mean: np.ndarray   # (J,)
    modes: np.ndarray  # (M, J)
    dims: tuple

    def __post_init__(self):
        if np.asarray(self.modes).shape[0] != len(self.dims):
            raise ConfigError("one germ dimension per mode is required")

    @property
    def germ_dims(self) -> tuple:
        return tuple(self.dims)

    def realize(self, xi: np.ndarray, positions: np.ndarray | None = None) -> np.ndarray:
        coords = np.asarray(xi, dtype=float)[list(self.dims)]
        return self.mean + coords @ self.modes

    def project(self, basis: ChaosBasis, positions: np.ndarray) -> np.ndarray:
        if positions.shape[0] != self.mean.shape[0]:
            raise ConfigError("affine field was built for a different grid")
        rows = np.zeros((len(basis), self.mean.shape[0]))
        rows[0] = self.mean
        for k, dim in enumerate(self.dims):
            e = np.zeros(basis.dim, dtype=np.int64)
            e[dim] = 1
            rows[basis.index_set.position(e)] = self.modes[k]
        return rows

    def with_zero_variance(self) -> "AffineFieldIC":
        return AffineFieldIC(mean=self.mean, modes=np.zeros_like(self.modes),
                             dims=self.dims)


InitialCondition = DeterministicIC | RandomSineIC | AffineFieldIC


# ---------------------------------------------------------------------------
# viscosity models (2D)
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class DeterministicViscosity:
    value: float

    germ_dims: tuple = ()

    def realize(self, xi: np.ndarray, n_points: int) -> tuple[np.ndarray, int]:
        return np.full(n_points, self.value), 0

    def mean_field(self, n_points: int) -> np.ndarray:
        return np.full(n_points, self.value)

    def mode_fields(self) -> list:
        return []

    def with_zero_variance(self) -> "DeterministicViscosity":
        return self


@dataclass(frozen=True)
class KlViscosity:
    """mean + sum_k modes[k](x) xi_k, clamped below at a positive floor.

    The clamp only acts on realized sample fields (the Galerkin side works
    with the unclamped affine representation); the returned counter reports
    how many grid values were lifted to the floor.
    """

    base: float
    modes: np.ndarray  # (M, J_real)
    dims: tuple
    floor: float = VISCOSITY_FLOOR

    @property
    def germ_dims(self) -> tuple:
        return tuple(self.dims)

    def realize(self, xi: np.ndarray, n_points: int) -> tuple[np.ndarray, int]:
        if self.modes.shape[1] != n_points:
            raise ConfigError("viscosity field was built for a different grid")
        coords = np.asarray(xi, dtype=float)[list(self.dims)]
        field = self.base + coords @ self.modes
        clamped = int(np.sum(field < self.floor))
        return np.maximum(field, self.floor), clamped

    def mean_field(self, n_points: int) -> np.ndarray:
        return np.full(n_points, self.base)

    def mode_fields(self) -> list:
        return [(dim, self.modes[k]) for k, dim in enumerate(self.dims)]

    def with_zero_variance(self) -> "KlViscosity":
        return KlViscosity(base=self.base, modes=np.zeros_like(self.modes),
                           dims=self.dims, floor=self.floor)


ViscosityModel = DeterministicViscosity | KlViscosity


# ---------------------------------------------------------------------------
# operators and the assembled problem
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Advection1D:
    """u_t = c u_x on a periodic interval (transport to the left for c > 0)."""

    speed: ScalarModel

    components = 1

    def with_zero_variance(self) -> "Advection1D":
        return Advection1D(self.speed.with_zero_variance())


@dataclass(frozen=True)
class InviscidBurgers1D:
    """u_t + u u_x = 0 on a periodic interval."""

    components = 1

    def with_zero_variance(self) -> "InviscidBurgers1D":
        return self


@dataclass(frozen=True)
class ViscousBurgers2D:
    """Two-component viscous Burgers system with Dirichlet walls.

    ``advection_form`` selects how the nonlinear term contracts with the
    kernel derivative: "grouped" multiplies (u + v) against the x-derivative
    in the u-equation and the y-derivative in the v-equation; "standard"
    uses the conventional u d/dx + v d/dy advection operator.
    """

    viscosity: ViscosityModel
    advection_form: str = "grouped"

    components = 2

    def __post_init__(self):
        if self.advection_form not in ("grouped", "standard"):
            raise ConfigError(f"unknown advection form {self.advection_form!r}")

    def with_zero_variance(self) -> "ViscousBurgers2D":
        return ViscousBurgers2D(self.viscosity.with_zero_variance(),
                                self.advection_form)


Operator = Advection1D | InviscidBurgers1D | ViscousBurgers2D


@dataclass(frozen=True)
class StochasticProblem:
    """Operator, initial data and boundary treatment over a shared germ."""

    operator: Operator
    ics: tuple  # one InitialCondition per velocity component
    germ_dim: int
    length: float = 1.0
    dirichlet_value: ScalarModel = DeterministicScalar(0.0)
    forcing: object | None = None  # callable positions -> (L, J) rows, rarely used

    def __post_init__(self):
        if len(self.ics) != self.operator.components:
            raise ConfigError(
                f"{self.operator.components} initial conditions required, "
                f"got {len(self.ics)}"
            )
        used = self.used_germ_dims()
        if used and max(used) >= self.germ_dim:
            raise ConfigError(
                f"germ dimension {self.germ_dim} too small for inputs using {sorted(used)}"
            )

    @property
    def dim(self) -> int:
        return 2 if isinstance(self.operator, ViscousBurgers2D) else 1

    @property
    def boundary_kind(self) -> str:
        return "dirichlet" if isinstance(self.operator, ViscousBurgers2D) else "periodic"

    def used_germ_dims(self) -> set:
        used = set()
        if isinstance(self.operator, Advection1D):
            used.update(self.operator.speed.germ_dims)
        if isinstance(self.operator, ViscousBurgers2D):
            used.update(self.operator.viscosity.germ_dims)
        for ic in self.ics:
            used.update(ic.germ_dims)
        used.update(self.dirichlet_value.germ_dims)
        return used

    def has_zero_variance(self) -> bool:
        """True when every random input has collapsed onto its mean."""

        def flat(model) -> bool:
            if isinstance(model, (GaussianScalar, LognormalScalar)):
                return model.std == 0.0
            if isinstance(model, RandomSineIC):
                return flat(model.amplitude) and flat(model.wavenumber)
            if isinstance(model, (AffineFieldIC, KlViscosity)):
                return not np.any(model.modes)
            return True

        models = list(self.ics) + [self.dirichlet_value]
        if isinstance(self.operator, Advection1D):
            models.append(self.operator.speed)
        if isinstance(self.operator, ViscousBurgers2D):
            models.append(self.operator.viscosity)
        return all(flat(m) for m in models)

    def with_zero_variance(self) -> "StochasticProblem":
        return StochasticProblem(
            operator=self.operator.with_zero_variance(),
            ics=tuple(ic.with_zero_variance() for ic in self.ics),
            germ_dim=self.germ_dim,
            length=self.length,
            dirichlet_value=self.dirichlet_value.with_zero_variance(),
            forcing=self.forcing,
        )


def realize_problem(problem: StochasticProblem, xi: np.ndarray,
                    positions: np.ndarray) -> tuple[StochasticProblem, int]:
    """Freeze every random input at one germ draw.

    Returns a fully deterministic problem (germ dimension 1, all inputs
    constant) plus the count of viscosity values clamped at the floor.
    The deterministic problem runs through the identical solver code path
    with a single-function chaos basis.
    """
    xi = np.asarray(xi, dtype=float)
    if xi.shape != (problem.germ_dim,):
        raise ConfigError(f"germ draw must have {problem.germ_dim} entries")

    ics = tuple(
        DeterministicIC(fn=_frozen_field(ic.realize(xi, positions)))
        for ic in problem.ics
    )
    clamped = 0
    if isinstance(problem.operator, Advection1D):
        op = Advection1D(DeterministicScalar(problem.operator.speed.realize(xi)))
    elif isinstance(problem.operator, InviscidBurgers1D):
        op = problem.operator
    else:
        field, clamped = problem.operator.viscosity.realize(xi, positions.shape[0])
        op = ViscousBurgers2D(
            viscosity=_FrozenViscosity(values=field),
            advection_form=problem.operator.advection_form,
        )
    g1 = DeterministicScalar(problem.dirichlet_value.realize(xi))
    frozen = StochasticProblem(operator=op, ics=ics, germ_dim=1, length=problem.length,
                               dirichlet_value=g1, forcing=problem.forcing)
    return frozen, clamped


def _frozen_field(values: np.ndarray):
    values = np.asarray(values, dtype=float)

    def fn(positions):
        if positions.shape[0] != values.shape[0]:
            raise ConfigError("frozen field evaluated on a different grid")
        return values

    return fn


@dataclass(frozen=True)
class _FrozenViscosity:
    """Per-particle viscosity values from a realized random field."""

    values: np.ndarray

    germ_dims: tuple = ()

    def realize(self, xi: np.ndarray, n_points: int) -> tuple[np.ndarray, int]:
        return self.values, 0

    def mean_field(self, n_points: int) -> np.ndarray:
        return self.values

    def mode_fields(self) -> list:
        return []

    def with_zero_variance(self) -> "_FrozenViscosity":
        return self
