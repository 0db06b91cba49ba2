"""Monte Carlo reference: deterministic solves plus a campaign driver.

Each sample freezes the germ and runs the identical kernel, neighbor,
derivative and stepper code as the chaos solver, collapsed to a single
coefficient row.  Sample germs come from counter-based streams keyed by
(master seed, sample index), so draws are reproducible bit for bit and
independent of the execution schedule.  First and second moments accumulate
in streaming form; chunk accumulators merge along a fixed pairwise tree so
the result does not depend on the worker count.
"""

from __future__ import annotations

import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from .chaos import ChaosBasis
from .errors import ConfigError, NumericalError
from .problems import StochasticProblem, realize_problem
from .solver import Discretization, Numerics, Simulation, Trajectory, build_discretization

_TRIVIAL_BASIS = ChaosBasis.total_degree(1, 0)


def sample_germ(seed: int, index: int, dim: int) -> np.ndarray:
    """Standard-normal germ draw for one sample from its private stream."""
    key = (int(seed) << 64) | int(index)
    gen = np.random.Generator(np.random.Philox(key=key))
    return gen.standard_normal(dim)


def solve_deterministic(problem: StochasticProblem, numerics: Numerics,
                        xi: np.ndarray, disc: Discretization | None = None,
                        ) -> tuple[Trajectory, int]:
    """Solve one germ realization; returns (trajectory, clamped viscosity count)."""
    disc = disc or build_discretization(problem, numerics)
    frozen, clamped = realize_problem(problem, xi, disc.positions[: disc.n_real])
    sim = Simulation(frozen, numerics, basis=_TRIVIAL_BASIS, disc=disc)
    return sim.run(), clamped


@dataclass
class MomentAccumulator:
    """Streaming (count, mean, M2) moments over arbitrary-shape fields."""

    count: int = 0
    mean: np.ndarray | None = None
    m2: np.ndarray | None = None

    def push(self, x: np.ndarray) -> None:
        x = np.asarray(x, dtype=float)
        if self.count == 0:
            self.mean = np.zeros_like(x)
            self.m2 = np.zeros_like(x)
        self.count += 1
        delta = x - self.mean
        self.mean += delta / self.count
        self.m2 += delta * (x - self.mean)

    def merge(self, other: "MomentAccumulator") -> "MomentAccumulator":
        if other.count == 0:
            return self
        if self.count == 0:
            return other
        n = self.count + other.count
        delta = other.mean - self.mean
        mean = self.mean + delta * (other.count / n)
        m2 = self.m2 + other.m2 + delta**2 * (self.count * other.count / n)
        return MomentAccumulator(count=n, mean=mean, m2=m2)

    def std(self) -> np.ndarray:
        if self.count < 2:
            raise ConfigError("need at least two samples for a standard deviation")
        return np.sqrt(self.m2 / (self.count - 1))


def merge_pairwise(accs: list[MomentAccumulator]) -> MomentAccumulator:
    """Deterministic pairwise-tree reduction of ordered accumulators."""
    if not accs:
        return MomentAccumulator()
    level = list(accs)
    while len(level) > 1:
        nxt = []
        for i in range(0, len(level) - 1, 2):
            nxt.append(level[i].merge(level[i + 1]))
        if len(level) % 2 == 1:
            nxt.append(level[-1])
        level = nxt
    return level[0]


@dataclass(frozen=True)
class McCampaign:
    """A Monte Carlo run: problem, numerics, sample count and master seed."""

    problem: StochasticProblem
    numerics: Numerics
    samples: int
    seed: int
    chunk_size: int = 32

    def __post_init__(self):
        if self.samples < 2:
            raise ConfigError("campaigns need at least two samples for moments")


@dataclass
class CampaignResult:
    times: np.ndarray
    steps: np.ndarray
    coords: np.ndarray
    mean: np.ndarray   # (n_snap, C, J)
    std: np.ndarray
    samples: int
    seconds: float
    clamped_viscosity: int
    germ_override: np.ndarray | None = None


# worker-process state, installed once per worker by the pool initializer
_WORKER: dict = {}


def _init_worker(problem, numerics):
    _WORKER["problem"] = problem
    _WORKER["numerics"] = numerics
    _WORKER["disc"] = build_discretization(problem, numerics)


def _run_chunk_local(problem, numerics, disc, seed, start, count, germ_override):
    acc = MomentAccumulator()
    clamped = 0
    for i in range(start, start + count):
        if germ_override is not None:
            xi = np.asarray(germ_override[i], dtype=float)
        else:
            xi = sample_germ(seed, i, problem.germ_dim)
        try:
            traj, nclamp = solve_deterministic(problem, numerics, xi, disc)
        except NumericalError as exc:
            raise NumericalError(
                f"sample {i} failed (germ {np.array2string(xi, precision=6)}): {exc}"
            ) from exc
        clamped += nclamp
        acc.push(traj.coeffs[:, :, 0, :])
        if i == start:
            meta = (traj.times, traj.steps, traj.coords)
    return acc, clamped, meta


def _run_chunk_worker(args):
    seed, start, count, germ_override = args
    return _run_chunk_local(_WORKER["problem"], _WORKER["numerics"], _WORKER["disc"],
                            seed, start, count, germ_override)


def run_campaign(campaign: McCampaign, threads: int = 1,
                 germ_override: np.ndarray | None = None) -> CampaignResult:
    """Run all samples and reduce their trajectories to mean/std fields.

    ``germ_override`` replaces the seeded draws with explicit germ vectors
    (one row per sample), which is how degenerate and forced-germ tests
    drive the campaign.
    """
    problem, numerics = campaign.problem, campaign.numerics
    if numerics.stepper != "eulerian":
        raise ConfigError("campaign moments require the eulerian stepper "
                          "(samples must share one output grid)")
    if germ_override is not None:
        germ_override = np.atleast_2d(np.asarray(germ_override, dtype=float))
        if germ_override.shape != (campaign.samples, problem.germ_dim):
            raise ConfigError("germ override must be (samples, germ_dim)")

    chunks = []
    start = 0
    while start < campaign.samples:
        count = min(campaign.chunk_size, campaign.samples - start)
        chunks.append((campaign.seed, start, count, germ_override))
        start += count

    t0 = time.perf_counter()
    results = []
    if threads <= 1 or len(chunks) == 1:
        disc = build_discretization(problem, numerics)
        for args in chunks:
            results.append(_run_chunk_local(problem, numerics, disc, *args))
    else:
        with ProcessPoolExecutor(max_workers=threads, initializer=_init_worker,
                                 initargs=(problem, numerics)) as pool:
            results = list(pool.map(_run_chunk_worker, chunks))
    seconds = time.perf_counter() - t0

    acc = merge_pairwise([r[0] for r in results])
    clamped = sum(r[1] for r in results)
    times, steps, coords = results[0][2]
    return CampaignResult(
        times=times, steps=steps, coords=coords,
        mean=acc.mean, std=acc.std(),
        samples=campaign.samples, seconds=seconds,
        clamped_viscosity=clamped,
        germ_override=germ_override,
    )
