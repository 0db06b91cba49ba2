"""High-level runs: one benchmark through either solver, comparisons, studies."""

from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np

from .benchmarks import BenchmarkSpec, build_problem
from .chaos import ChaosBasis
from .config import spec_hash
from .errors import ConfigError
from .mc import CampaignResult, McCampaign, run_campaign
from .postprocess import (
    ErrorReport,
    MomentField,
    campaign_moments,
    relative_l2,
    trajectory_moments,
)
from .problems import StochasticProblem
from .solver import Numerics, Simulation, build_discretization


@dataclass
class ChaosRun:
    field: MomentField
    seconds: float
    basis_size: int


@dataclass
class McRun:
    field: MomentField
    seconds: float
    result: CampaignResult


def run_chaos(spec: BenchmarkSpec, problem: StochasticProblem | None = None) -> ChaosRun:
    """Solve the coupled coefficient system; timing covers basis + integration."""
    problem = problem or build_problem(spec)
    meta = spec_hash(spec)
    t0 = time.perf_counter()
    basis = ChaosBasis.total_degree(problem.germ_dim, spec.numerics.order)
    sim = Simulation(problem, spec.numerics, basis=basis)
    traj = sim.run()
    seconds = time.perf_counter() - t0
    return ChaosRun(field=trajectory_moments(traj, meta), seconds=seconds,
                    basis_size=len(basis))


def run_monte_carlo(spec: BenchmarkSpec, seed: int, threads: int = 1,
                    problem: StochasticProblem | None = None,
                    samples: int | None = None) -> McRun:
    problem = problem or build_problem(spec)
    meta = spec_hash(spec)
    campaign = McCampaign(problem=problem, numerics=spec.numerics,
                          samples=samples or spec.mc_samples, seed=seed)
    result = run_campaign(campaign, threads=threads)
    return McRun(field=campaign_moments(result, meta), seconds=result.seconds,
                 result=result)


@dataclass
class Comparison:
    spec: BenchmarkSpec
    ssph: ChaosRun
    mcs: McRun
    err_mean: float
    err_std: float
    ratio: float

    @property
    def within_tolerance(self) -> bool:
        return self.err_mean <= self.spec.tol_mean and self.err_std <= self.spec.tol_std


def compare(spec: BenchmarkSpec, seed: int, threads: int = 1) -> Comparison:
    """Chaos and Monte Carlo on the same problem, plus the error report."""
    problem = build_problem(spec)
    ssph = run_chaos(spec, problem)
    mcs = run_monte_carlo(spec, seed, threads, problem)
    if ssph.field.meta_hash != mcs.field.meta_hash:
        raise ConfigError("comparison refused: runs carry different config hashes")
    err_mean = relative_l2(ssph.field, mcs.field, "mean").value
    err_std = relative_l2(ssph.field, mcs.field, "std").value
    ratio = mcs.seconds / ssph.seconds if ssph.seconds > 0 else float("inf")
    return Comparison(spec=spec, ssph=ssph, mcs=mcs,
                      err_mean=err_mean, err_std=err_std, ratio=ratio)


def convergence_study(spec: BenchmarkSpec, orders, seed: int,
                      threads: int = 1) -> ErrorReport:
    """Rerun the chaos solver per order against one fixed Monte Carlo baseline."""
    orders = sorted(set(int(q) for q in orders))
    if not orders:
        raise ConfigError("convergence study needs at least one order")
    problem = build_problem(spec)
    baseline = run_monte_carlo(spec, seed, threads, problem)
    report = ErrorReport(orders=[], err_mean=[], err_std=[], seconds=[])
    for q in orders:
        spec_q = spec.with_overrides(order=q)
        run = run_chaos(spec_q, problem)
        # baseline grid metadata matches: only the chaos order changed
        run.field.meta_hash = baseline.field.meta_hash
        report.orders.append(q)
        report.err_mean.append(relative_l2(run.field, baseline.field, "mean").value)
        report.err_std.append(relative_l2(run.field, baseline.field, "std").value)
        report.seconds.append(run.seconds)
    report.wall_clock_ratio = baseline.seconds / min(report.seconds)
    return report
