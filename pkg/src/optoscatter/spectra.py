"""Detuning sweeps, spectral feature extraction and the side/direct mapping."""
from __future__ import annotations

import enum
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from typing import IO, Optional

import numpy as np
from scipy.optimize import minimize_scalar

from .model import Geometry, SystemParams
from .scattering import AUTO, AmplitudeSet, ScatteringError, SolverConfig, TruncationError, solve_points

THREADS_ENV = "OPTOSCATTER_THREADS"
CHUNK = 128


@dataclass(frozen=True)
class SweepGrid:
    delta_c_min: float = -2.5
    delta_c_max: float = 3.5
    points: int = 2001

    def __post_init__(self):
        if self.points < 2:
            raise ValueError("a sweep grid needs at least 2 points")
        if not self.delta_c_min < self.delta_c_max:
            raise ValueError("delta_c_min must be smaller than delta_c_max")

    @property
    def spacing(self) -> float:
        return (self.delta_c_max - self.delta_c_min) / (self.points - 1)

    def values(self) -> np.ndarray:
        return np.linspace(self.delta_c_min, self.delta_c_max, self.points)


@dataclass
class SpectrumSweep:
    grid: SweepGrid
    params: SystemParams
    delta_c: np.ndarray
    T: np.ndarray
    R: np.ndarray
    t2: np.ndarray = field(repr=False)
    r2: np.ndarray = field(repr=False)
    n_max_used: int
    residual_max: float = float("nan")

    @property
    def flux(self) -> np.ndarray:
        return self.T + self.R

    @property
    def flux_error_max(self) -> float:
        return float(np.max(np.abs(self.flux - 1.0)))


class FeatureKind(str, enum.Enum):
    DIP = "dip"
    PEAK = "peak"
    EIT_WINDOW = "eit_window"


@dataclass(frozen=True)
class SpectralFeature:
    kind: FeatureKind
    location: float
    value: float
    width: float = float("nan")


def thread_count() -> int:
    raw = os.environ.get(THREADS_ENV)
    if raw:
        return max(1, int(raw))
    return os.cpu_count() or 1


def map_geometry(amps: AmplitudeSet, geometry) -> AmplitudeSet:
    """Re-express side-coupled amplitudes for another coupling geometry.

    The direct-coupled transmission in channel ``n`` is the side-coupled
    reflection in that channel and vice versa, so ``direct`` swaps ``t`` and
    ``r`` and flips the geometry tag. Applying it twice is the identity.
    """
    geometry = Geometry(geometry)
    if geometry is Geometry.SIDE:
        return amps
    flipped = Geometry.DIRECT if amps.geometry is Geometry.SIDE else Geometry.SIDE
    return replace(amps, t=amps.r, r=amps.t, geometry=flipped)


def grid_truncate(
    params: SystemParams, deltas: np.ndarray, cfg: SolverConfig, threads: Optional[int] = None
) -> tuple[int, tuple]:
    """Truncation ladder run over a whole grid.

    Climbs ``n0 + step, n0 + 2*step, ...`` until T and R change by less than
    ``convergence_tol`` at every grid point between consecutive rungs, then
    returns the upper rung of that pair together with its solution, since it
    has already been computed and is the more accurate of the two.
    """
    step = cfg.auto_nmax_step
    n_max = params.n0 + step
    lower = solve_grid(params, deltas, n_max, threads)
    history = []
    while n_max + step <= cfg.ceiling:
        upper = solve_grid(params, deltas, n_max + step, threads)
        dT = np.abs(_total(upper[0]) - _total(lower[0]))
        dR = np.abs(_total(upper[1]) - _total(lower[1]))
        history.append(float(_total(upper[0])[np.argmax(dT)]))
        if dT.max() < cfg.convergence_tol and dR.max() < cfg.convergence_tol:
            return n_max + step, upper
        n_max += step
        lower = upper
    last = tuple(history[-2:]) if len(history) >= 2 else (float("nan"), float("nan"))
    raise TruncationError(n_max, last, float(deltas[0]))


def _total(amps: np.ndarray) -> np.ndarray:
    return np.sum(np.abs(amps) ** 2, axis=1)


def _solve_chunk(params, chunk, n_max, with_residual):
    try:
        return solve_points(params, chunk, n_max, with_residual=with_residual)
    except ScatteringError as exc:
        raise ScatteringError(f"{exc} (grid chunk {chunk[0]!r}..{chunk[-1]!r})") from exc


def solve_grid(
    params: SystemParams,
    deltas: np.ndarray,
    n_max: int,
    threads: Optional[int] = None,
    with_residual: bool = False,
):
    """Exact amplitudes over a detuning array, chunked and optionally threaded.

    Chunk boundaries are fixed, so the result is identical for any thread count.
    """
    deltas = np.asarray(deltas, dtype=float)
    chunks = [deltas[i : i + CHUNK] for i in range(0, len(deltas), CHUNK)]
    threads = thread_count() if threads is None else threads
    if threads > 1 and len(chunks) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            parts = list(pool.map(lambda c: _solve_chunk(params, c, n_max, with_residual), chunks))
    else:
        parts = [_solve_chunk(params, c, n_max, with_residual) for c in chunks]
    t, r, e, f = (np.concatenate(p) for p in list(zip(*parts))[:4])
    res = np.concatenate([p[4] for p in parts]) if with_residual else None
    return t, r, e, f, res


def sweep(
    params: SystemParams,
    grid: SweepGrid = SweepGrid(),
    cfg: SolverConfig = SolverConfig(),
    threads: Optional[int] = None,
) -> SpectrumSweep:
    """T and R over a uniform detuning grid with one shared truncation.

    With ``n_max='auto'`` one truncation is chosen for the whole grid by
    :func:`grid_truncate`, which keeps the per-channel columns aligned.
    """
    deltas = grid.values()
    if cfg.n_max == AUTO:
        n_max, _ = grid_truncate(params, deltas, cfg, threads)
    else:
        n_max = int(cfg.n_max)
    t, r, _, _, res = solve_grid(params, deltas, n_max, threads, with_residual=True)
    if params.geometry is Geometry.DIRECT:
        t, r = r, t
    t2 = np.abs(t) ** 2
    r2 = np.abs(r) ** 2
    return SpectrumSweep(
        grid=grid,
        params=params,
        delta_c=deltas,
        T=t2.sum(axis=1),
        R=r2.sum(axis=1),
        t2=t2,
        r2=r2,
        n_max_used=n_max,
        residual_max=float(res.max()),
    )


def _fmt(x: float) -> str:
    return format(float(x), ".17g")


def write_sweep_csv(sw: SpectrumSweep, out: IO[str]) -> None:
    N = sw.n_max_used + 1
    header = ["delta_c", "T", "R", "flux"]
    header += [f"t2_{n}" for n in range(N)] + [f"r2_{n}" for n in range(N)]
    out.write(",".join(header) + "\n")
    flux = sw.flux
    for i in range(len(sw.delta_c)):
        row = [sw.delta_c[i], sw.T[i], sw.R[i], flux[i], *sw.t2[i], *sw.r2[i]]
        out.write(",".join(_fmt(x) for x in row) + "\n")


def _parabola(x: np.ndarray, y: np.ndarray, i: int) -> tuple[float, float]:
    y0, y1, y2 = y[i - 1], y[i], y[i + 1]
    h = x[i + 1] - x[i]
    denom = y0 - 2 * y1 + y2
    if denom == 0:
        return float(x[i]), float(y1)
    off = 0.5 * (y0 - y2) / denom
    return float(x[i] + off * h), float(y1 - 0.25 * (y0 - y2) * off)


def _half_width(x: np.ndarray, y: np.ndarray, i: int, level: float, above: bool) -> float:
    def crossing(step):
        j = i
        while 0 <= j + step < len(y):
            a, b = y[j], y[j + step]
            if (b >= level) if above else (b <= level):
                frac = (level - a) / (b - a) if b != a else 0.0
                return abs(x[j] + frac * (x[j + step] - x[j]) - x[i])
            j += step
        return None

    sides = [w for w in (crossing(-1), crossing(1)) if w is not None]
    return float(np.mean(sides)) if sides else float("nan")


def find_features(sw: SpectrumSweep, threshold: float = 0.5) -> list[SpectralFeature]:
    """Dips, peaks and EIT-like windows of the transmission spectrum.

    Dips are local minima of T below ``threshold``; peaks are local maxima
    above ``1 - threshold``. A peak with a dip on each side within three
    cavity linewidths is reported as an ``eit_window`` instead.
    """
    x, T = sw.delta_c, sw.T
    dips, peaks = [], []
    for i in range(1, len(T) - 1):
        if T[i] < T[i - 1] and T[i] <= T[i + 1] and T[i] < threshold:
            loc, val = _parabola(x, T, i)
            width = _half_width(x, T, i, 0.5 * (1.0 + T[i]), above=True)
            dips.append(SpectralFeature(FeatureKind.DIP, loc, float(np.clip(val, 0, 1)), width))
        elif T[i] > T[i - 1] and T[i] >= T[i + 1] and T[i] > 1 - threshold:
            loc, val = _parabola(x, T, i)
            width = _half_width(x, T, i, 0.5 * T[i], above=False)
            peaks.append(SpectralFeature(FeatureKind.PEAK, loc, float(np.clip(val, 0, 1)), width))
    reach = 3.0 * sw.params.Gamma
    features = list(dips)
    for p in peaks:
        left = any(p.location - reach <= d.location < p.location for d in dips)
        right = any(p.location < d.location <= p.location + reach for d in dips)
        features.append(replace(p, kind=FeatureKind.EIT_WINDOW) if left and right else p)
    return sorted(features, key=lambda f: f.location)


def refine_extremum(
    params: SystemParams,
    n_max: int,
    bracket: tuple[float, float],
    kind: str = "min",
    quantity: str = "T",
) -> tuple[float, float]:
    """Locate a transmission/reflection extremum off-grid inside ``bracket``.

    Returns ``(location, value)``.
    """
    col = {"T": 0, "R": 1}[quantity]
    sign = 1.0 if kind == "min" else -1.0

    def objective(x):
        t, r, *_ = solve_points(params, [x], n_max)
        amps = (t, r)[col]
        return sign * float(np.sum(np.abs(amps) ** 2))

    res = minimize_scalar(objective, bounds=bracket, method="bounded", options={"xatol": 1e-10})
    return float(res.x), sign * float(res.fun)
