"""Outgoing photon spectra for a Gaussian single-photon wavepacket.

A photon leaving in channel ``n`` has given ``n - n0`` phonons to the mirror,
so a component incident at ``x`` is observed at ``x - (n - n0)``. The
occupation spectra add these contributions as probabilities::

    S_T(w) = sum_n |t_n(w + n - n0)|**2 G(w + n - n0)

and likewise for ``S_R``. Amplitudes of different channels landing on the same
output frequency are not made to interfere.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import IO, Optional

import numpy as np

from .model import Geometry, SystemParams
from .scattering import AUTO, SolverConfig
from .spectra import SweepGrid, _fmt, grid_truncate, solve_grid

# Incident points whose Gaussian weight underflows are skipped.
_LOG_G_FLOOR = -745.0


@dataclass(frozen=True)
class WavepacketSpec:
    delta_0: float
    d: float
    grid: SweepGrid

    def __post_init__(self):
        if not (math.isfinite(self.d) and self.d > 0):
            raise ValueError(f"wavepacket width d must be positive, got {self.d!r}")
        if not math.isfinite(self.delta_0):
            raise ValueError("delta_0 must be finite")


@dataclass
class OccupationSpectra:
    delta: np.ndarray
    G: np.ndarray
    S_T: np.ndarray
    S_R: np.ndarray
    n_max_used: int
    warnings: list[str] = field(default_factory=list)

    @property
    def total_T(self) -> float:
        return float(np.trapezoid(self.S_T, self.delta))

    @property
    def total_R(self) -> float:
        return float(np.trapezoid(self.S_R, self.delta))

    @property
    def loss(self) -> float:
        return 1.0 - self.total_T - self.total_R


def log_spectral_density(delta, delta_0: float, d: float):
    return 0.5 * np.log(2.0 / (math.pi * d * d)) - 2.0 * (np.asarray(delta) - delta_0) ** 2 / (d * d)


def spectral_density(delta, delta_0: float, d: float):
    """Incident density ``|alpha|**2 = sqrt(2/(pi d^2)) exp(-2 (x - delta_0)^2 / d^2)``."""
    return np.exp(log_spectral_density(delta, delta_0, d))


def _support_nmax(params: SystemParams, wp: WavepacketSpec, cfg: SolverConfig) -> int:
    if cfg.n_max != AUTO:
        return int(cfg.n_max)
    probe = np.linspace(wp.delta_0 - 3 * wp.d, wp.delta_0 + 3 * wp.d, 401)
    n_max, _ = grid_truncate(params, probe, cfg)
    return n_max


def coverage_warnings(params: SystemParams, wp: WavepacketSpec, n_sidebands: int) -> list[str]:
    lo = wp.delta_0 - 3 * wp.d - n_sidebands
    hi = wp.delta_0 + 3 * wp.d + params.n0
    g = wp.grid
    if g.delta_c_min > lo or g.delta_c_max < hi:
        return [
            f"output grid [{g.delta_c_min:g}, {g.delta_c_max:g}] does not cover "
            f"[{lo:g}, {hi:g}] (delta_0 +/- 3d plus {n_sidebands} sidebands); mass will be lost"
        ]
    return []


def occupation_spectra(
    params: SystemParams,
    wp: WavepacketSpec,
    cfg: SolverConfig = SolverConfig(),
    threads: Optional[int] = None,
) -> OccupationSpectra:
    """Transmitted and reflected photon densities ``S_T``, ``S_R`` on ``wp.grid``."""
    n_max = _support_nmax(params, wp, cfg)
    out = wp.grid.values()
    shifts = np.arange(n_max + 1) - params.n0
    incident = out[:, None] + shifts[None, :]
    log_g = log_spectral_density(incident, wp.delta_0, wp.d)
    live = log_g > _LOG_G_FLOOR
    # Commensurate grids reuse one solve for many (output, channel) pairs.
    keys = np.round(incident[live], 10)
    unique, inverse = np.unique(keys, return_inverse=True)
    t, r, *_ = solve_grid(params, unique, n_max, threads)
    if params.geometry is Geometry.DIRECT:
        t, r = r, t
    rows, chans = np.nonzero(live)
    weight = np.exp(log_g[live])
    t2 = np.abs(t[inverse, chans]) ** 2 * weight
    r2 = np.abs(r[inverse, chans]) ** 2 * weight
    S_T = np.zeros(len(out))
    S_R = np.zeros(len(out))
    np.add.at(S_T, rows, t2)
    np.add.at(S_R, rows, r2)

    spectra = OccupationSpectra(out, spectral_density(out, wp.delta_0, wp.d), S_T, S_R, n_max)
    # Sidebands that actually carry weight, judged from the per-channel totals.
    per_channel = np.bincount(chans, weights=t2 + r2, minlength=n_max + 1) * wp.grid.spacing
    populated = np.flatnonzero(per_channel > 1e-8 * per_channel.sum())
    n_side = int(populated.max()) - params.n0 if populated.size else 0
    spectra.warnings.extend(coverage_warnings(params, wp, max(n_side, 0)))
    for msg in spectra.warnings:
        warnings.warn(msg, stacklevel=2)
    return spectra


def incident_totals(
    params: SystemParams,
    delta_0: float,
    d: float,
    cfg: SolverConfig = SolverConfig(),
    points: int = 4001,
    span: float = 6.0,
) -> tuple[float, float]:
    """``(int S_T, int S_R)`` evaluated on the incident axis.

    Shifting each channel back to its incident frequency turns the totals
    into ``int T(x) G(x) dx`` and ``int R(x) G(x) dx``, which need no output
    grid wide enough to hold every sideband. Trapezoid on ``delta_0 +/- span*d``.
    """
    x = np.linspace(delta_0 - span * d, delta_0 + span * d, points)
    if cfg.n_max == AUTO:
        n_max, (t, r, *_) = grid_truncate(params, x, cfg)
    else:
        t, r, *_ = solve_grid(params, x, int(cfg.n_max))
    g = spectral_density(x, delta_0, d)
    T = np.sum(np.abs(t) ** 2, axis=1)
    R = np.sum(np.abs(r) ** 2, axis=1)
    return float(np.trapezoid(T * g, x)), float(np.trapezoid(R * g, x))


def write_occupation_csv(spec: OccupationSpectra, out: IO[str]) -> None:
    out.write("delta_c,G,S_T,S_R\n")
    for row in zip(spec.delta, spec.G, spec.S_T, spec.S_R):
        out.write(",".join(_fmt(v) for v in row) + "\n")


def write_occupation_summary(spec: OccupationSpectra, out: IO[str]) -> None:
    out.write(f"integral_S_T = {_fmt(spec.total_T)}\n")
    out.write(f"integral_S_R = {_fmt(spec.total_R)}\n")
    out.write(f"loss = {_fmt(spec.loss)}\n")
    out.write(f"n_max = {spec.n_max_used}\n")
