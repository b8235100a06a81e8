"""Run configuration: INI-style files, figure presets, overrides and validation.

A config file has the sections ``[run]``, ``[params]``, ``[grid]``,
``[solver]``, ``[wavepacket]`` and ``[levels]``; see the README for every
key. Values are layered as defaults < preset < file < ``--override``.
"""
from __future__ import annotations

import configparser
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Mapping, Optional

from .model import Geometry, SystemParams
from .scattering import AUTO, SolverConfig
from .spectra import SweepGrid
from .wavepacket import WavepacketSpec, coverage_warnings

MODES = ("sweep", "wavepacket", "levels", "overlaps_dump")

DEFAULTS: dict[str, dict[str, str]] = {
    "run": {"mode": "sweep", "output": "out"},
    "params": {
        "g0": "0",
        "lambda": "0",
        "Gamma": "0.1",
        "gamma_a": "0",
        "delta_ac": "0",
        "n0": "0",
        "geometry": "side",
    },
    "grid": {"min": "-2.5", "max": "3.5", "points": "2001"},
    "solver": {
        "n_max": AUTO,
        "convergence_tol": "1e-8",
        "series_order": "2",
        "auto_nmax_step": "8",
        "ceiling": "512",
    },
    "wavepacket": {},
    "levels": {"count": "5"},
}

KNOWN_KEYS = {
    "run": {"mode", "output", "preset"},
    "params": set(DEFAULTS["params"]),
    "grid": set(DEFAULTS["grid"]),
    "solver": set(DEFAULTS["solver"]),
    "wavepacket": {"delta_0", "d"},
    "levels": {"count"},
}

_SQRT2 = repr(math.sqrt(2.0))
_G0_ROWS = {"a": "0", "b": "0.5", "c": "1", "d": _SQRT2}
_WIDE = {"min": "-6", "max": "6", "points": "2001"}


def _build_presets() -> dict[str, dict[str, dict[str, str]]]:
    presets: dict[str, dict[str, dict[str, str]]] = {}
    for tag, g0 in _G0_ROWS.items():
        presets[f"fig2{tag}"] = {"params": {"g0": g0, "lambda": "0"}}
        presets[f"fig4{tag}"] = {"params": {"g0": g0, "lambda": "4"}, "grid": dict(_WIDE)}
        presets[f"fig5{tag}"] = {"params": {"g0": g0, "lambda": "0.05"}}
    for col, g0 in zip("ace", ("0", "1", _SQRT2)):
        presets[f"fig6{col}"] = {"params": {"g0": g0, "lambda": "0.05", "delta_ac": "-0.1"}}
        presets[f"fig7{col}"] = {"params": {"g0": g0, "lambda": "0.1", "gamma_a": "0.01"}}
    for col, g0 in zip("bdf", ("0", "1", _SQRT2)):
        presets[f"fig6{col}"] = {"params": {"g0": g0, "lambda": "0.05", "delta_ac": "0.1"}}
        presets[f"fig7{col}"] = {
            "params": {"g0": g0, "lambda": "4", "gamma_a": "0.01"},
            "grid": dict(_WIDE),
        }
    for name, lam in (("fig8", "0.1"), ("fig8b", "4")):
        presets[name] = {
            "run": {"mode": "wavepacket"},
            "params": {"g0": "1", "lambda": lam, "gamma_a": "0.01"},
            "grid": {"min": "-30", "max": "20", "points": "10001"},
            "wavepacket": {"delta_0": "0", "d": "4"},
        }
    return presets


PRESETS = _build_presets()


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class Diagnostic:
    level: str  # "warning" or "error"
    field: str
    message: str

    def __str__(self):
        return f"{self.level}: [{self.field}] {self.message}"


@dataclass(frozen=True)
class RunConfig:
    params: SystemParams
    mode: str
    grid: SweepGrid
    solver: SolverConfig
    wavepacket: Optional[WavepacketSpec]
    output_path: str
    preset: Optional[str] = None
    level_count: int = 5


Raw = dict[str, dict[str, str]]


def _copy(raw: Mapping[str, Mapping[str, str]]) -> Raw:
    return {sec: dict(vals) for sec, vals in raw.items()}


def _merge(base: Raw, layer: Mapping[str, Mapping[str, str]]) -> Raw:
    out = _copy(base)
    for sec, vals in layer.items():
        out.setdefault(sec, {}).update(vals)
    return out


def read_config_file(path: str | Path) -> Raw:
    parser = configparser.ConfigParser(interpolation=None)
    parser.optionxform = str  # keys are case sensitive (Gamma vs gamma_a)
    try:
        with open(path) as fh:
            parser.read_file(fh)
    except configparser.ParsingError as exc:
        where = "; ".join(f"line {lineno}: {text.strip()}" for lineno, text in exc.errors)
        raise ConfigError(f"{path}, {where}") from exc
    except (configparser.Error, OSError) as exc:
        raise ConfigError(f"{path}: {exc}") from exc
    return {sec: dict(parser[sec]) for sec in parser.sections()}


def parse_override(text: str) -> tuple[str, str, str]:
    key, sep, value = text.partition("=")
    section, dot, name = key.strip().partition(".")
    if not sep or not dot or not name:
        raise ConfigError(f"override {text!r} must look like section.key=value")
    return section, name, value.strip()


def resolve(
    file_raw: Optional[Mapping[str, Mapping[str, str]]] = None,
    preset: Optional[str] = None,
    overrides: tuple[str, ...] = (),
) -> Raw:
    """Layer defaults, preset, file and overrides into one raw mapping."""
    file_raw = _copy(file_raw or {})
    preset = preset or file_raw.get("run", {}).get("preset")
    raw = _copy(DEFAULTS)
    if preset:
        if preset not in PRESETS:
            raise ConfigError(f"unknown preset {preset!r}; choose from {', '.join(sorted(PRESETS))}")
        raw = _merge(raw, PRESETS[preset])
        raw["run"]["preset"] = preset
    raw = _merge(raw, file_raw)
    if preset:
        raw["run"]["preset"] = preset
    for text in overrides:
        section, name, value = parse_override(text)
        raw.setdefault(section, {})[name] = value
    return raw


def _number(raw: Raw, section: str, key: str, diags: list[Diagnostic], integer: bool = False):
    text = raw.get(section, {}).get(key)
    if text is None:
        return None
    try:
        value = float(text)
        if integer:
            if not value.is_integer():
                raise ValueError
            return int(value)
        return value
    except ValueError:
        kind = "an integer" if integer else "a number"
        diags.append(Diagnostic("error", f"{section}.{key}", f"expected {kind}, got {text!r}"))
        return None


def validate(raw: Mapping[str, Mapping[str, str]]) -> list[Diagnostic]:
    """Warnings and hard errors for a resolved raw config; never mutates it."""
    raw = _copy(raw)
    diags: list[Diagnostic] = []
    for section, vals in raw.items():
        if section not in KNOWN_KEYS:
            diags.append(Diagnostic("error", section, "unknown section"))
            continue
        for key in vals:
            if key not in KNOWN_KEYS[section]:
                diags.append(Diagnostic("error", f"{section}.{key}", "unknown key"))

    mode = raw.get("run", {}).get("mode", "sweep")
    if mode not in MODES:
        diags.append(Diagnostic("error", "run.mode", f"must be one of {', '.join(MODES)}, got {mode!r}"))

    p = {k: _number(raw, "params", k, diags) for k in ("g0", "lambda", "Gamma", "gamma_a", "delta_ac")}
    n0 = _number(raw, "params", "n0", diags, integer=True)
    geometry = raw.get("params", {}).get("geometry", "side")
    if geometry not in {g.value for g in Geometry}:
        diags.append(Diagnostic("error", "params.geometry", f"must be side or direct, got {geometry!r}"))
    params = None
    if None not in p.values() and n0 is not None and geometry in {g.value for g in Geometry}:
        try:
            params = SystemParams(p["g0"], p["lambda"], p["Gamma"], p["gamma_a"], p["delta_ac"], n0, geometry)
        except ValueError as exc:
            diags.append(Diagnostic("error", "params", str(exc)))
    if params is not None:
        diags.extend(Diagnostic("warning", "params.Gamma", msg) for msg in params.warnings())

    lo = _number(raw, "grid", "min", diags)
    hi = _number(raw, "grid", "max", diags)
    points = _number(raw, "grid", "points", diags, integer=True)
    grid = None
    if None not in (lo, hi, points):
        try:
            grid = SweepGrid(lo, hi, points)
        except ValueError as exc:
            diags.append(Diagnostic("error", "grid", str(exc)))

    n_max_text = raw.get("solver", {}).get("n_max", AUTO)
    if n_max_text != AUTO:
        _number(raw, "solver", "n_max", diags, integer=True)
    tol = _number(raw, "solver", "convergence_tol", diags)
    if tol is not None and not tol > 0:
        diags.append(Diagnostic("error", "solver.convergence_tol", "must be positive"))
    for key in ("series_order", "auto_nmax_step", "ceiling"):
        _number(raw, "solver", key, diags, integer=True)
    count = _number(raw, "levels", "count", diags, integer=True)
    if count is not None and count < 1:
        diags.append(Diagnostic("error", "levels.count", "must be >= 1"))

    if mode == "wavepacket":
        wp = raw.get("wavepacket", {})
        for key in ("delta_0", "d"):
            if key not in wp:
                diags.append(Diagnostic("error", f"wavepacket.{key}", "required in wavepacket mode"))
        d = _number(raw, "wavepacket", "d", diags)
        d0 = _number(raw, "wavepacket", "delta_0", diags)
        if d is not None and not d > 0:
            diags.append(Diagnostic("error", "wavepacket.d", "must be positive"))
        elif d is not None and d0 is not None and grid is not None and params is not None:
            spec = WavepacketSpec(d0, d, grid)
            # Poisson spread of the displaced vacuum bounds the populated sidebands.
            beta2 = params.g0**2
            n_side = math.ceil(beta2 + 4 * math.sqrt(beta2) + 1) if beta2 else 0
            diags.extend(Diagnostic("warning", "grid", m) for m in coverage_warnings(params, spec, n_side))
    return diags


def build(raw: Mapping[str, Mapping[str, str]]) -> RunConfig:
    """Turn a validated raw mapping into a :class:`RunConfig`."""
    errors = [d for d in validate(raw) if d.level == "error"]
    if errors:
        raise ConfigError("; ".join(str(d) for d in errors))
    p, g, s, run = raw["params"], raw["grid"], raw["solver"], raw["run"]
    params = SystemParams(
        g0=float(p["g0"]),
        lam=float(p["lambda"]),
        Gamma=float(p["Gamma"]),
        gamma_a=float(p["gamma_a"]),
        delta_ac=float(p["delta_ac"]),
        n0=int(float(p["n0"])),
        geometry=p["geometry"],
    )
    grid = SweepGrid(float(g["min"]), float(g["max"]), int(float(g["points"])))
    solver = SolverConfig(
        n_max=AUTO if s["n_max"] == AUTO else int(float(s["n_max"])),
        convergence_tol=float(s["convergence_tol"]),
        series_order=int(float(s["series_order"])),
        auto_nmax_step=int(float(s["auto_nmax_step"])),
        ceiling=int(float(s["ceiling"])),
    )
    wp = None
    w = raw.get("wavepacket", {})
    if "d" in w and "delta_0" in w:
        wp = WavepacketSpec(float(w["delta_0"]), float(w["d"]), grid)
    return RunConfig(
        params=params,
        mode=run["mode"],
        grid=grid,
        solver=solver,
        wavepacket=wp,
        output_path=run["output"],
        preset=run.get("preset"),
        level_count=int(float(raw.get("levels", {}).get("count", 5))),
    )
