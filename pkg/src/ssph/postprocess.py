"""Moment extraction, error metrics, studies and CSV emission.

With an orthonormal basis the first two moments fall out of the coefficient
rows directly: the mean is row zero and the variance the sum of squares of
the remaining rows.  All error norms are relative L2 over the space-time
output grid, skipping the first few startup steps.
"""

from __future__ import annotations

import io
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .errors import ConfigError
from .mc import CampaignResult
from .solver import Trajectory

STARTUP_STEPS = 5  # snapshots earlier than this step index are excluded from norms
DEGENERATE_NORM = 1e-14


@dataclass
class MomentField:
    """Mean/std fields on the space-time output grid of one run."""

    times: np.ndarray   # (nt,)
    steps: np.ndarray   # (nt,)
    coords: np.ndarray  # (J, d)
    mean: np.ndarray    # (nt, C, J)
    std: np.ndarray     # (nt, C, J)
    source: str         # "ssph" | "mcs"
    meta_hash: str = ""

    def __post_init__(self):
        if self.mean.shape != self.std.shape:
            raise ConfigError("mean and std grids differ")
        if np.any(self.std < 0):
            raise ConfigError("standard deviations must be non-negative")

    @property
    def components(self) -> int:
        return self.mean.shape[1]

    def same_grid(self, other: "MomentField") -> bool:
        return (
            self.mean.shape == other.mean.shape
            and np.array_equal(self.steps, other.steps)
            and np.allclose(self.times, other.times)
            and np.allclose(self.coords, other.coords)
        )


def moments_from_coefficients(coeffs: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Mean and std from chaos coefficients; input (..., L, J)."""
    coeffs = np.asarray(coeffs, dtype=float)
    mean = coeffs[..., 0, :]
    std = np.sqrt(np.sum(coeffs[..., 1:, :] ** 2, axis=-2))
    return mean, std


def trajectory_moments(traj: Trajectory, meta_hash: str = "") -> MomentField:
    mean, std = moments_from_coefficients(traj.coeffs)
    return MomentField(times=traj.times, steps=traj.steps, coords=traj.coords,
                       mean=mean, std=std, source="ssph", meta_hash=meta_hash)


def campaign_moments(result: CampaignResult, meta_hash: str = "") -> MomentField:
    return MomentField(times=result.times, steps=result.steps, coords=result.coords,
                       mean=result.mean, std=result.std, source="mcs",
                       meta_hash=meta_hash)


class RelativeError(NamedTuple):
    value: float
    absolute_fallback: bool  # True when the reference norm was ~zero


def relative_l2(a: MomentField, b: MomentField, which: str = "mean",
                min_step: int = STARTUP_STEPS) -> RelativeError:
    """|a - b| / |b| over the common space-time grid (b is the reference)."""
    if which not in ("mean", "std"):
        raise ConfigError(f"unknown moment {which!r}")
    if not a.same_grid(b):
        raise ConfigError("moment fields live on different grids")
    keep = a.steps >= min_step
    if not np.any(keep):
        keep = np.ones(len(a.steps), dtype=bool)
    fa = getattr(a, which)[keep]
    fb = getattr(b, which)[keep]
    ref = float(np.linalg.norm(fb))
    diff = float(np.linalg.norm(fa - fb))
    if ref < DEGENERATE_NORM:
        return RelativeError(value=float(np.linalg.norm(fa)), absolute_fallback=True)
    return RelativeError(value=diff / ref, absolute_fallback=False)


# ---------------------------------------------------------------------------
# CSV emission (all writers are byte-deterministic for fixed inputs)
# ---------------------------------------------------------------------------


def write_moments_csv(field: MomentField, path) -> None:
    buf = io.StringIO()
    buf.write(f"# schema=moments source={field.source} config={field.meta_hash}\n")
    dim = field.coords.shape[1]
    coord_cols = "x" if dim == 1 else "x,y"
    comp_col = "" if field.components == 1 else "component,"
    buf.write(f"t,{coord_cols},{comp_col}mean,std\n")
    for it in range(len(field.times)):
        t = field.times[it]
        for c in range(field.components):
            for j in range(field.coords.shape[0]):
                coords = ",".join(repr(v) for v in field.coords[j])
                comp = f"{c}," if field.components > 1 else ""
                buf.write(f"{t!r},{coords},{comp}{field.mean[it, c, j]!r},"
                          f"{field.std[it, c, j]!r}\n")
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(buf.getvalue())


def read_moments_header(path) -> dict:
    with open(path, "r", encoding="utf-8") as fh:
        first = fh.readline().strip()
    if not first.startswith("# schema=moments"):
        raise ConfigError(f"{path} is not a moments CSV")
    out = {}
    for token in first[2:].split():
        key, _, value = token.partition("=")
        out[key] = value
    return out


@dataclass
class ErrorReport:
    """Per-order errors against one Monte Carlo baseline."""

    orders: list
    err_mean: list
    err_std: list
    seconds: list
    wall_clock_ratio: float = float("nan")

    def rows(self):
        order = np.argsort(self.orders)
        for i in order:
            yield (self.orders[i], self.err_mean[i], self.err_std[i], self.seconds[i])


def write_error_csv(report: ErrorReport, path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("q,err_mean,err_std,seconds\n")
        for q, em, es, sec in report.rows():
            fh.write(f"{q},{em!r},{es!r},{sec!r}\n")


def write_timing_report(path, samples: int, mcs_seconds: float,
                        ssph_seconds: float, order: int) -> float:
    """Key-value timing file; returns the wall-clock ratio."""
    ratio = mcs_seconds / ssph_seconds if ssph_seconds > 0 else float("inf")
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(f"samples = {samples}\n")
        fh.write(f"order = {order}\n")
        fh.write(f"mcs_seconds = {mcs_seconds!r}\n")
        fh.write(f"mcs_seconds_per_sample = {mcs_seconds / samples!r}\n")
        fh.write(f"ssph_seconds = {ssph_seconds!r}\n")
        fh.write(f"ratio = {ratio!r}\n")
    return ratio


def speedup_ratio(mcs_seconds: float, ssph_seconds: float) -> float:
    if ssph_seconds <= 0:
        raise ConfigError("solver timing must be positive")
    return mcs_seconds / ssph_seconds


# ---------------------------------------------------------------------------
# probes: temporal slices at fixed x, spatial slices at fixed t
# ---------------------------------------------------------------------------

PROBE_POSITIONS = (0.30, 0.70)
PROBE_TIMES = (0.30, 0.50, 0.70)


def probe_rows(ssph: MomentField, mcs: MomentField,
               positions=PROBE_POSITIONS, times=PROBE_TIMES) -> list[tuple]:
    """Long-format probe rows; probe times beyond the horizon are dropped."""
    if not ssph.same_grid(mcs):
        raise ConfigError("probe extraction needs matching grids")
    if ssph.coords.shape[1] != 1:
        raise ConfigError("probes are defined for 1D benchmarks")
    xs = ssph.coords[:, 0]
    horizon = ssph.times.max()
    rows = []
    for which in ("mean", "std"):
        fs, fm = getattr(ssph, which), getattr(mcs, which)
        for x0 in positions:
            j = int(np.argmin(np.abs(xs - x0)))
            for it, t in enumerate(ssph.times):
                rows.append(("temporal", float(xs[j]), float(t),
                             float(fs[it, 0, j]), float(fm[it, 0, j]), which))
        for t0 in times:
            if t0 > horizon + 1e-12:
                continue  # probes outside the configured horizon are undefined
            it = int(np.argmin(np.abs(ssph.times - t0)))
            for j in range(xs.shape[0]):
                rows.append(("spatial", float(ssph.times[it]), float(xs[j]),
                             float(fs[it, 0, j]), float(fm[it, 0, j]), which))
    return rows


def write_probes_csv(rows, path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("kind,coord,t_or_x,ssph_val,mcs_val,which_moment\n")
        for kind, coord, tx, sv, mv, which in rows:
            fh.write(f"{kind},{coord!r},{tx!r},{sv!r},{mv!r},{which}\n")
