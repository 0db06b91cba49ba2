"""Sectioned key-value config files for benchmark specs, plus metadata hashing.

A spec dumps to an INI-style file with sections [benchmark], [numerics],
[random], [mc], [tolerances] and [notes]; parsing the dump reconstructs an
identical spec (floats are written with repr, so the round trip is exact).
The canonical dump text also feeds the metadata hash embedded in every
output file.
"""

from __future__ import annotations

import configparser
import hashlib
import io
from dataclasses import replace

from .benchmarks import BenchmarkSpec
from .errors import ConfigError
from .solver import Numerics

_NUMERICS_FIELDS = [
    ("resolution", int), ("dt", float), ("t_final", float), ("h_factor", float),
    ("radius_factor", float), ("order", int), ("kernel_family", str),
    ("output_stride", int), ("stepper", str), ("corrected", bool),
    ("cfl_factor", lambda s: None if s == "none" else float(s)),
    ("quad_nodes", int),
]

_RANDOM_FIELDS = [
    ("seed_fields", int),
    ("speed_kind", str), ("speed_mean", float), ("speed_std", float),
    ("ic_kind", str), ("ic_amp_mean", float), ("ic_amp_std", float),
    ("ic_wav_mean", float), ("ic_wav_std", float),
    ("grf_variance", float), ("grf_length", float), ("grf_modes", int),
    ("grf_mean_amp", float),
    ("fourier_modes", int), ("fourier_ensemble", int),
    ("visc_kind", str), ("visc_mean", float), ("visc_variance", float),
    ("visc_length", float), ("visc_modes", int),
]


def _fmt(value) -> str:
    if value is None:
        return "none"
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    return str(value)


def dump_spec(spec: BenchmarkSpec) -> str:
    """Canonical INI text for a spec (deterministic field order)."""
    buf = io.StringIO()
    buf.write("[benchmark]\n")
    buf.write(f"id = {spec.benchmark_id}\n")
    buf.write(f"family = {spec.family}\n")
    buf.write(f"case = {spec.case}\n")
    buf.write("\n[numerics]\n")
    for name, _ in _NUMERICS_FIELDS:
        buf.write(f"{name} = {_fmt(getattr(spec.numerics, name))}\n")
    buf.write("\n[random]\n")
    for name, _ in _RANDOM_FIELDS:
        buf.write(f"{name} = {_fmt(getattr(spec, name))}\n")
    buf.write("\n[mc]\n")
    buf.write(f"samples = {spec.mc_samples}\n")
    buf.write("\n[tolerances]\n")
    buf.write(f"mean = {_fmt(spec.tol_mean)}\n")
    buf.write(f"std = {_fmt(spec.tol_std)}\n")
    buf.write("\n[notes]\n")
    for i, note in enumerate(spec.notes):
        buf.write(f"note{i} = {note}\n")
    for i, (name, value) in enumerate(spec.overrides):
        buf.write(f"override{i} = {name}={value}\n")
    return buf.getvalue()


def _parse_value(section: str, name: str, raw: str, cast):
    try:
        if cast is bool:
            if raw.lower() not in ("true", "false"):
                raise ValueError("expected true or false")
            return raw.lower() == "true"
        return cast(raw)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"[{section}] {name} = {raw!r}: {exc}") from exc


def parse_spec(text: str) -> BenchmarkSpec:
    """Parse a dump back into a spec, validating every field."""
    cp = configparser.ConfigParser(interpolation=None)
    try:
        cp.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(f"malformed config: {exc}") from exc
    for section in ("benchmark", "numerics", "random", "mc", "tolerances"):
        if section not in cp:
            raise ConfigError(f"missing [{section}] section")

    num_kwargs = {}
    for name, cast in _NUMERICS_FIELDS:
        if name not in cp["numerics"]:
            raise ConfigError(f"[numerics] {name} is required")
        num_kwargs[name] = _parse_value("numerics", name, cp["numerics"][name], cast)
    try:
        numerics = Numerics(**num_kwargs)
    except ConfigError as exc:
        raise ConfigError(f"[numerics] {exc}") from exc

    rand_kwargs = {}
    for name, cast in _RANDOM_FIELDS:
        if name not in cp["random"]:
            raise ConfigError(f"[random] {name} is required")
        rand_kwargs[name] = _parse_value("random", name, cp["random"][name], cast)

    samples = _parse_value("mc", "samples", cp["mc"].get("samples", ""), int)
    if samples < 2:
        raise ConfigError("[mc] samples must be at least 2")
    tol_mean = _parse_value("tolerances", "mean", cp["tolerances"].get("mean", ""), float)
    tol_std = _parse_value("tolerances", "std", cp["tolerances"].get("std", ""), float)
    if tol_mean <= 0 or tol_std <= 0:
        raise ConfigError("[tolerances] entries must be positive")

    notes, overrides = [], []
    if "notes" in cp:
        for key in sorted(cp["notes"], key=_note_order):
            value = cp["notes"][key]
            if key.startswith("override"):
                name, _, val = value.partition("=")
                overrides.append((name, val))
            else:
                notes.append(value)

    return BenchmarkSpec(
        benchmark_id=cp["benchmark"].get("id", "custom"),
        family=cp["benchmark"].get("family", ""),
        case=cp["benchmark"].get("case", ""),
        numerics=numerics,
        mc_samples=samples,
        tol_mean=tol_mean,
        tol_std=tol_std,
        notes=tuple(notes),
        overrides=tuple(overrides),
        **rand_kwargs,
    )


def _note_order(key: str):
    digits = "".join(ch for ch in key if ch.isdigit())
    return (0 if key.startswith("note") else 1, int(digits) if digits else 0)


def spec_hash(spec: BenchmarkSpec) -> str:
    """Short content hash of the canonical config text."""
    return hashlib.sha256(dump_spec(spec).encode()).hexdigest()[:12]


def load_spec_file(path) -> BenchmarkSpec:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_spec(fh.read())


def save_spec_file(spec: BenchmarkSpec, path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(dump_spec(spec))
