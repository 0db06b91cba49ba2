"""Particle clouds, boundary topologies and neighbor lists."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import backend
from .errors import ConfigError


@dataclass(frozen=True)
class OpenTopology:
    """Unbounded domain; plain Euclidean distances."""

    def displacement(self, a: np.ndarray, b: np.ndarray) -> np.ndarray:
        return a - b


@dataclass(frozen=True)
class PeriodicTopology:
    """Periodic box via the minimum-image convention (no ghost copies)."""

    period: tuple[float, ...]

    def displacement(self, a: np.ndarray, b: np.ndarray) -> np.ndarray:
        d = a - b
        p = np.asarray(self.period, dtype=float)
        return d - p * np.round(d / p)

    def wrap(self, positions: np.ndarray) -> np.ndarray:
        p = np.asarray(self.period, dtype=float)
        return np.mod(positions, p)


@dataclass(frozen=True)
class DirichletGhostTopology:
    """Bounded box with a mirrored ghost band outside each wall.

    Distances are plain Euclidean; the ghost band supplies kernel support
    beyond the walls.  ``band_width`` is the mirror depth (typically the
    kernel support radius).
    """

    lo: tuple[float, ...]
    hi: tuple[float, ...]
    band_width: float

    def displacement(self, a: np.ndarray, b: np.ndarray) -> np.ndarray:
        return a - b


Topology = OpenTopology | PeriodicTopology | DirichletGhostTopology


@dataclass(frozen=True)
class GhostBand:
    """Bookkeeping for mirrored ghost particles appended after the real ones.

    ``source`` maps each ghost to the real particle it mirrors; ``mirror``
    records which axes were reflected (ghosts near a corner reflect both).
    """

    source: np.ndarray  # (G,) int
    mirror: np.ndarray  # (G, d) bool


@dataclass
class ParticleSystem:
    """Positions, masses and densities of all particles, plus topology.

    Ghost particles (if any) occupy the trailing rows; ``n_real`` marks the
    boundary.  Volumes are always derived as m / rho.
    """

    positions: np.ndarray
    masses: np.ndarray
    densities: np.ndarray
    topology: Topology
    search_radius: float
    n_real: int = -1
    ghosts: GhostBand | None = None
    wall_mask: np.ndarray | None = field(default=None)  # real particles pinned by a Dirichlet wall

    def __post_init__(self):
        self.positions = np.ascontiguousarray(np.atleast_2d(self.positions), dtype=float)
        if self.positions.ndim != 2:
            raise ConfigError("positions must be a (J, d) array")
        n = self.positions.shape[0]
        self.masses = np.ascontiguousarray(self.masses, dtype=float)
        self.densities = np.ascontiguousarray(self.densities, dtype=float)
        if self.masses.shape != (n,) or self.densities.shape != (n,):
            raise ConfigError("masses and densities must be length-J arrays")
        if not (np.all(self.masses > 0) and np.all(self.densities > 0)):
            raise ConfigError("masses and densities must be strictly positive")
        if not (self.search_radius > 0 and np.isfinite(self.search_radius)):
            raise ConfigError("search radius must be positive")
        if self.n_real < 0:
            self.n_real = n
        if isinstance(self.topology, PeriodicTopology):
            if len(self.topology.period) != self.dim:
                raise ConfigError("period must give one entry per axis")
            self.positions = self.topology.wrap(self.positions)

    @property
    def n(self) -> int:
        return self.positions.shape[0]

    @property
    def dim(self) -> int:
        return self.positions.shape[1]

    @property
    def volumes(self) -> np.ndarray:
        return self.masses / self.densities

    @property
    def period_or_none(self) -> np.ndarray | None:
        if isinstance(self.topology, PeriodicTopology):
            return np.asarray(self.topology.period, dtype=float)
        return None

    def with_positions(self, positions: np.ndarray) -> "ParticleSystem":
        return ParticleSystem(
            positions=positions,
            masses=self.masses,
            densities=self.densities,
            topology=self.topology,
            search_radius=self.search_radius,
            n_real=self.n_real,
            ghosts=self.ghosts,
            wall_mask=self.wall_mask,
        )


@dataclass(frozen=True)
class NeighborLists:
    """CSR neighbor lists: row j holds all k with dist(x_j, x_k) <= c_r."""

    indptr: np.ndarray
    indices: np.ndarray
    stamp: int = 0  # time-step index at which the lists were built

    @property
    def pair_row(self) -> np.ndarray:
        counts = np.diff(self.indptr)
        return np.repeat(np.arange(len(counts), dtype=np.int64), counts)

    def row(self, j: int) -> np.ndarray:
        return self.indices[self.indptr[j] : self.indptr[j + 1]]

    def as_sets(self) -> list[set[int]]:
        return [set(self.row(j).tolist()) for j in range(len(self.indptr) - 1)]


def brute_force_neighbors(system: ParticleSystem, stamp: int = 0) -> NeighborLists:
    """Reference all-pairs search; the fast searches must match it exactly."""
    pos = system.positions
    n = system.n
    rows = []
    for j in range(n):
        d = system.topology.displacement(pos[j], pos)
        keep = np.einsum("kd,kd->k", d, d) <= system.search_radius**2
        rows.append(np.flatnonzero(keep).astype(np.int64))
    counts = np.array([len(r) for r in rows], dtype=np.int64)
    indptr = np.zeros(n + 1, dtype=np.int64)
    np.cumsum(counts, out=indptr[1:])
    return NeighborLists(indptr=indptr, indices=np.concatenate(rows), stamp=stamp)


def neighbor_lists(system: ParticleSystem, method: str = "auto", stamp: int = 0) -> NeighborLists:
    """Build neighbor lists with the fast search (or the reference loop)."""
    if method == "brute":
        return brute_force_neighbors(system, stamp)
    if method not in ("auto", "grid"):
        raise ConfigError(f"unknown neighbor search method {method!r}")
    indptr, indices = backend.neighbor_csr(
        system.positions, system.search_radius, system.period_or_none
    )
    return NeighborLists(indptr=indptr, indices=indices, stamp=stamp)


# ---------------------------------------------------------------------------
# lattice builders used by the benchmark problems
# ---------------------------------------------------------------------------


def periodic_line(n: int, period: float = 1.0, h_factor: float = 1.2,
                  radius_factor: float = 2.0) -> tuple[ParticleSystem, float]:
    """Uniform 1D lattice of n particles on [0, period); returns (system, h)."""
    dx = period / n
    x = (np.arange(n) * dx)[:, None]
    h = h_factor * dx
    system = ParticleSystem(
        positions=x,
        masses=np.full(n, dx),
        densities=np.ones(n),
        topology=PeriodicTopology(period=(period,)),
        search_radius=radius_factor * h,
    )
    return system, h


def open_line(n: int, length: float = 1.0, h_factor: float = 1.2,
              radius_factor: float = 2.0) -> tuple[ParticleSystem, float]:
    """Uniform open-ended 1D lattice spanning [0, length]."""
    dx = length / (n - 1)
    x = np.linspace(0.0, length, n)[:, None]
    h = h_factor * dx
    system = ParticleSystem(
        positions=x,
        masses=np.full(n, dx),
        densities=np.ones(n),
        topology=OpenTopology(),
        search_radius=radius_factor * h,
    )
    return system, h


def dirichlet_grid(n_cells: int, h_factor: float = 1.6, radius_factor: float = 2.0,
                   length: float = 1.0) -> tuple[ParticleSystem, float]:
    """2D node grid on [0, length]^2 with mirrored ghost bands outside walls.

    ``n_cells`` intervals per axis gives (n_cells + 1)^2 real particles with
    spacing dx = length / n_cells, walls included.  Ghosts mirror every real
    particle within the band of each wall (corner particles mirror twice).
    """
    dx = length / n_cells
    axis = np.arange(n_cells + 1) * dx
    xx, yy = np.meshgrid(axis, axis, indexing="ij")
    real = np.column_stack([xx.ravel(), yy.ravel()])
    h = h_factor * dx
    band = radius_factor * h

    wall = (
        np.isclose(real[:, 0], 0.0) | np.isclose(real[:, 0], length)
        | np.isclose(real[:, 1], 0.0) | np.isclose(real[:, 1], length)
    )

    ghost_pos, ghost_src, ghost_mirror = [], [], []
    lo, hi = 0.0, length

    def mirrored(coord, axis_id):
        out = []
        if lo < coord[axis_id] <= lo + band:
            m = coord.copy()
            m[axis_id] = 2 * lo - m[axis_id]
            out.append(m)
        if hi - band <= coord[axis_id] < hi:
            m = coord.copy()
            m[axis_id] = 2 * hi - m[axis_id]
            out.append(m)
        return out

    for idx in range(real.shape[0]):
        p = real[idx]
        for mx in mirrored(p, 0):
            ghost_pos.append(mx); ghost_src.append(idx); ghost_mirror.append((True, False))
        for my in mirrored(p, 1):
            ghost_pos.append(my); ghost_src.append(idx); ghost_mirror.append((False, True))
        for mx in mirrored(p, 0):
            for mxy in mirrored(mx, 1):
                ghost_pos.append(mxy); ghost_src.append(idx); ghost_mirror.append((True, True))

    n_real = real.shape[0]
    if ghost_pos:
        positions = np.vstack([real, np.asarray(ghost_pos)])
        ghosts = GhostBand(
            source=np.asarray(ghost_src, dtype=np.int64),
            mirror=np.asarray(ghost_mirror, dtype=bool),
        )
    else:
        positions = real
        ghosts = None

    n_total = positions.shape[0]
    system = ParticleSystem(
        positions=positions,
        masses=np.full(n_total, dx * dx),
        densities=np.ones(n_total),
        topology=DirichletGhostTopology(lo=(lo, lo), hi=(hi, hi), band_width=band),
        search_radius=radius_factor * h,
        n_real=n_real,
        ghosts=ghosts,
        wall_mask=wall,
    )
    return system, h
