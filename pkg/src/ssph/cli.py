"""Command-line front end.

Subcommands:
  run        one benchmark with one method, moments to CSV
  compare    chaos + Monte Carlo + error report (exit 4 past tolerance)
  converge   chaos order sweep against one Monte Carlo baseline
  spec       dump or validate benchmark config files
  kl         inspect the KL spectrum behind a benchmark's random field
  bench      compare the compiled and pure-Python backends

Exit codes: 0 success, 2 configuration error, 3 numerical failure,
4 tolerance failure in `compare`.
"""

from __future__ import annotations

import argparse
import os
import sys
from pathlib import Path

import numpy as np

from . import backend
from .benchmarks import REGISTRY, breaking_time_estimate, desk_preset, get_spec
from .config import dump_spec, load_spec_file, save_spec_file, spec_hash
from .errors import ConfigError, NumericalError
from .postprocess import (
    ErrorReport,
    probe_rows,
    write_error_csv,
    write_moments_csv,
    write_probes_csv,
    write_timing_report,
)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3
EXIT_TOLERANCE = 4


def _add_common(p: argparse.ArgumentParser, with_mode: bool = False):
    p.add_argument("--config", type=Path, default=None,
                   help="load the benchmark from a config file instead of the registry")
    p.add_argument("--seed", type=int, default=20250810, help="master seed")
    p.add_argument("--out", type=Path, default=Path("."), help="output directory")
    p.add_argument("--threads", type=int, default=None,
                   help="worker processes for Monte Carlo (default S_SPH_THREADS or 1)")
    p.add_argument("--order", type=int, default=None, help="chaos order override")
    p.add_argument("--samples", type=int, default=None, help="Monte Carlo sample override")
    p.add_argument("--stepper", choices=("eulerian", "lagrangian"), default=None)
    p.add_argument("--preset", choices=("desk",), default=None,
                   help="apply the reduced desk-scale preset")
    if with_mode:
        p.add_argument("--mode", choices=("ssph", "mcs"), default="ssph")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ssph",
        description="stochastic-Galerkin SPH solver with a Monte Carlo baseline",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    run_p = sub.add_parser("run", help="run one benchmark with one method")
    run_p.add_argument("benchmark", help=f"one of: {', '.join(sorted(REGISTRY))}")
    _add_common(run_p, with_mode=True)

    cmp_p = sub.add_parser("compare", help="chaos vs Monte Carlo with error report")
    cmp_p.add_argument("benchmark")
    cmp_p.add_argument("--probes", action="store_true",
                       help="emit probe slices (1D benchmarks)")
    _add_common(cmp_p)

    conv_p = sub.add_parser("converge", help="error versus chaos order")
    conv_p.add_argument("benchmark")
    conv_p.add_argument("--orders", default="1,2,3,4,5",
                        help="comma-separated chaos orders")
    _add_common(conv_p)

    spec_p = sub.add_parser("spec", help="dump or validate benchmark configs")
    spec_sub = spec_p.add_subparsers(dest="spec_command", required=True)
    dump_p = spec_sub.add_parser("dump")
    dump_p.add_argument("benchmark")
    dump_p.add_argument("--out", type=Path, default=None, help="file (default stdout)")
    dump_p.add_argument("--preset", choices=("desk",), default=None)
    val_p = spec_sub.add_parser("validate")
    val_p.add_argument("file", type=Path)

    kl_p = sub.add_parser("kl", help="random-field spectrum inspection")
    kl_sub = kl_p.add_subparsers(dest="kl_command", required=True)
    ins_p = kl_sub.add_parser("inspect")
    ins_p.add_argument("benchmark")
    ins_p.add_argument("--out", type=Path, default=Path("."))
    ins_p.add_argument("--preset", choices=("desk",), default=None)

    bench_p = sub.add_parser("bench", help="compare compiled and pure backends")
    bench_p.add_argument("--particles", type=int, default=4096)
    bench_p.add_argument("--rows", type=int, default=6)
    bench_p.add_argument("--repeats", type=int, default=50)

    return parser


def _threads(args) -> int:
    if args.threads is not None:
        return max(1, args.threads)
    env = os.environ.get("S_SPH_THREADS", "")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            raise ConfigError(f"S_SPH_THREADS must be an integer, got {env!r}")
    return 1


def _load_benchmark(args):
    if args.config is not None:
        spec = load_spec_file(args.config)
    else:
        spec = get_spec(args.benchmark)
    if getattr(args, "preset", None) == "desk":
        spec = desk_preset(spec)
    overrides = {}
    for name in ("order", "samples", "stepper"):
        value = getattr(args, name, None)
        if value is not None:
            overrides["mc_samples" if name == "samples" else name] = value
    if overrides:
        spec = spec.with_overrides(**overrides)
    return spec


def _write_metadata(spec, out: Path) -> None:
    save_spec_file(spec, out / "spec_used.ini")


def cmd_run(args) -> int:
    from .runs import run_chaos, run_monte_carlo

    spec = _load_benchmark(args)
    out = args.out
    out.mkdir(parents=True, exist_ok=True)
    _write_metadata(spec, out)
    if args.mode == "ssph":
        run = run_chaos(spec)
        write_moments_csv(run.field, out / "ssph_moments.csv")
        print(f"ssph: {run.basis_size} basis functions, {run.seconds:.3f} s "
              f"-> {out / 'ssph_moments.csv'}")
    else:
        run = run_monte_carlo(spec, args.seed, _threads(args))
        write_moments_csv(run.field, out / "mcs_moments.csv")
        print(f"mcs: {run.result.samples} samples, {run.seconds:.3f} s "
              f"-> {out / 'mcs_moments.csv'}")
        if run.result.clamped_viscosity:
            print(f"warning: {run.result.clamped_viscosity} viscosity values "
                  "clamped at the positive floor")
    return EXIT_OK


def cmd_compare(args) -> int:
    from .runs import compare

    spec = _load_benchmark(args)
    out = args.out
    out.mkdir(parents=True, exist_ok=True)
    _write_metadata(spec, out)
    result = compare(spec, args.seed, _threads(args))
    write_moments_csv(result.ssph.field, out / "ssph_moments.csv")
    write_moments_csv(result.mcs.field, out / "mcs_moments.csv")
    report = ErrorReport(orders=[spec.numerics.order],
                         err_mean=[result.err_mean], err_std=[result.err_std],
                         seconds=[result.ssph.seconds],
                         wall_clock_ratio=result.ratio)
    write_error_csv(report, out / "error_report.csv")
    write_timing_report(out / "timing.txt", result.mcs.result.samples,
                        result.mcs.seconds, result.ssph.seconds,
                        spec.numerics.order)
    if args.probes:
        if result.ssph.field.coords.shape[1] == 1:
            write_probes_csv(probe_rows(result.ssph.field, result.mcs.field),
                             out / "probes.csv")
        else:
            print("probes are defined for 1D benchmarks; skipped")
    print(f"err_mean={result.err_mean:.4f} (tol {spec.tol_mean}) "
          f"err_std={result.err_std:.4f} (tol {spec.tol_std}) "
          f"speedup={result.ratio:.1f}x")
    return EXIT_OK if result.within_tolerance else EXIT_TOLERANCE


def cmd_converge(args) -> int:
    from .runs import convergence_study

    spec = _load_benchmark(args)
    try:
        orders = [int(tok) for tok in args.orders.split(",") if tok.strip()]
    except ValueError:
        raise ConfigError(f"--orders must be comma-separated integers, got {args.orders!r}")
    out = args.out
    out.mkdir(parents=True, exist_ok=True)
    _write_metadata(spec, out)
    report = convergence_study(spec, orders, args.seed, _threads(args))
    write_error_csv(report, out / "convergence.csv")
    for q, em, es, sec in report.rows():
        print(f"q={q}: err_mean={em:.4f} err_std={es:.4f} ({sec:.2f} s)")
    return EXIT_OK


def cmd_spec(args) -> int:
    if args.spec_command == "dump":
        spec = get_spec(args.benchmark)
        if args.preset == "desk":
            spec = desk_preset(spec)
        text = dump_spec(spec)
        if args.out is None:
            sys.stdout.write(text)
        else:
            args.out.parent.mkdir(parents=True, exist_ok=True)
            args.out.write_text(text, encoding="utf-8")
            print(f"wrote {args.out}")
        return EXIT_OK
    spec = load_spec_file(args.file)
    if spec.family == "burgers1d":
        guard = breaking_time_estimate(spec)
        if spec.numerics.t_final > guard:
            raise ConfigError(
                f"[numerics] t_final = {spec.numerics.t_final} exceeds the "
                f"wave-breaking estimate {guard:.4f}")
    print(f"{args.file}: valid ({spec.benchmark_id}, hash {spec_hash(spec)})")
    return EXIT_OK


def cmd_kl(args) -> int:
    from .benchmarks import build_problem, real_grid, viscosity_model
    from .problems import AffineFieldIC, KlViscosity
    from .random_fields import KLExpansion, spectrum_to_csv

    spec = get_spec(args.benchmark)
    if args.preset == "desk":
        spec = desk_preset(spec)
    problem = build_problem(spec)
    expansion = None
    for ic in problem.ics:
        if isinstance(ic, AffineFieldIC):
            lam = np.sum(ic.modes**2 * _grid_weights_for(spec), axis=1)
            expansion = KLExpansion(
                mean=ic.mean, eigenvalues=np.sort(lam)[::-1],
                functions=ic.modes, weights=_grid_weights_for(spec),
                total_energy=float(np.sum(lam)))
            break
    if expansion is None and isinstance(getattr(problem.operator, "viscosity", None),
                                        KlViscosity):
        visc = problem.operator.viscosity
        lam = np.sum(visc.modes**2 * _grid_weights_for(spec), axis=1)
        expansion = KLExpansion(mean=visc.mean_field(visc.modes.shape[1]),
                                eigenvalues=np.sort(lam)[::-1],
                                functions=visc.modes,
                                weights=_grid_weights_for(spec),
                                total_energy=float(np.sum(lam)))
    if expansion is None:
        raise ConfigError(f"benchmark {spec.benchmark_id} has no KL-expanded input")
    args.out.mkdir(parents=True, exist_ok=True)
    path = args.out / f"{spec.benchmark_id}_spectrum.csv"
    spectrum_to_csv(expansion, path)
    print(f"wrote {path} ({expansion.m} retained modes)")
    return EXIT_OK


def _grid_weights_for(spec):
    from .benchmarks import _grid_weights, real_grid

    return _grid_weights(spec, real_grid(spec))


def cmd_bench(args) -> int:
    from .backend_bench import run_benchmark

    run_benchmark(n_particles=args.particles, n_rows=args.rows, repeats=args.repeats)
    return EXIT_OK


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        # argparse exits 2 on usage errors, which matches the config exit code
        return int(exc.code) if exc.code else EXIT_OK
    handlers = {
        "run": cmd_run,
        "compare": cmd_compare,
        "converge": cmd_converge,
        "spec": cmd_spec,
        "kl": cmd_kl,
        "bench": cmd_bench,
    }
    try:
        return handlers[args.command](args)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
