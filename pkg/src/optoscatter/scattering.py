"""Single-photon scattering amplitudes for the side-coupled hybrid cavity.

Conventions: ``v_g = 1`` and ``V = sqrt(Gamma)``, ``Omega = 1``. Channel ``n``
is the mirror left in ``|n>`` after the photon leaves; ``n0`` is the initial
mirror state.

The exact solution eliminates ``t``, ``r`` and ``f`` from the four amplitude
equations, leaving an ``(n_max + 1)``-dimensional dense system for the cavity
amplitudes ``e``::

    sum_m [Dc(m) U[n, m] - lam**2 / Da(n) U[n, m]] e[m] = sqrt(Gamma) delta(n, n0)

with ``Dc(m) = delta_c + n0 - m + delta + i Gamma`` and
``Da(n) = delta_c - delta_ac + n0 - n + i gamma_a``. The raw
``4 (n_max + 1)`` system is kept both as a residual check and as the fallback
when some ``Da(n)`` vanishes.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Union

import numpy as np

from .model import Geometry, SystemParams
from .overlap import cached_overlaps

AUTO = "auto"
DEFAULT_CEILING = 512
# |Da(n)| at or below this (relative to the detuning scale) counts as a pole.
POLE_TOL = 1e-13


class ScatteringError(RuntimeError):
    pass


class PoleError(ScatteringError):
    def __init__(self, n: int, delta_c: float):
        super().__init__(f"atomic pole Da({n}) = 0 at delta_c={delta_c!r} with no atomic width")
        self.n = n
        self.delta_c = delta_c


class TruncationError(ScatteringError):
    def __init__(self, n_max: int, last_T: tuple[float, float], delta_c: float):
        super().__init__(
            f"truncation did not converge up to n_max={n_max} at delta_c={delta_c!r}; "
            f"last two T values {last_T[0]!r}, {last_T[1]!r}"
        )
        self.n_max = n_max
        self.last_T = last_T
        self.delta_c = delta_c


@dataclass(frozen=True)
class SolverConfig:
    n_max: Union[int, str] = AUTO
    convergence_tol: float = 1e-8
    series_order: int = 2
    auto_nmax_step: int = 8
    ceiling: int = DEFAULT_CEILING

    def __post_init__(self):
        if self.n_max != AUTO and (not isinstance(self.n_max, (int, np.integer)) or self.n_max < 0):
            raise ValueError(f"n_max must be a non-negative integer or 'auto', got {self.n_max!r}")
        if not self.convergence_tol > 0:
            raise ValueError("convergence_tol must be positive")
        if self.series_order < 0:
            raise ValueError("series_order must be >= 0")
        if self.auto_nmax_step < 1:
            raise ValueError("auto_nmax_step must be >= 1")


@dataclass(frozen=True)
class AmplitudeSet:
    delta_c: float
    t: np.ndarray
    r: np.ndarray
    e: np.ndarray
    f: np.ndarray
    n0: int
    geometry: Geometry = Geometry.SIDE
    residual: float = float("nan")

    @property
    def n_max(self) -> int:
        return len(self.t) - 1


def delta_c_tilde(params: SystemParams, delta_c, m):
    """Complex cavity denominator ``delta_c + n0 - m + delta + i Gamma``."""
    return delta_c + (params.n0 - np.asarray(m)) + params.delta + 1j * params.Gamma


def delta_a_tilde(params: SystemParams, delta_c, n):
    """Complex atomic denominator ``delta_c - delta_ac + n0 - n + i gamma_a``."""
    return delta_c - params.delta_ac + (params.n0 - np.asarray(n)) + 1j * params.gamma_a


def _resolve_nmax(params: SystemParams, delta_c: float, cfg: SolverConfig) -> int:
    if cfg.n_max == AUTO:
        return auto_truncate(params, delta_c, cfg)
    if cfg.n_max < params.n0:
        raise ValueError(f"n_max={cfg.n_max} must be >= n0={params.n0}")
    return int(cfg.n_max)


def _near_pole(da: np.ndarray, deltas: np.ndarray, N: int) -> np.ndarray:
    # Judged on |Da| itself so a vanishing but nonzero gamma_a is caught too.
    scale = 1.0 + np.abs(deltas)[:, None] + N
    return np.abs(da) <= POLE_TOL * scale


def _pole_mask(params: SystemParams, deltas: np.ndarray, N: int) -> np.ndarray:
    if params.lam == 0.0:
        return np.zeros(len(deltas), dtype=bool)
    da = delta_a_tilde(params, deltas[:, None], np.arange(N)[None, :])
    return _near_pole(da, deltas, N).any(axis=1)


def reduced_matrices(params: SystemParams, deltas: np.ndarray, U: np.ndarray) -> np.ndarray:
    """Stack of reduced ``(N, N)`` matrices, one per detuning."""
    N = U.shape[0]
    idx = np.arange(N)
    dc = delta_c_tilde(params, deltas[:, None], idx[None, :])
    A = U[None, :, :] * dc[:, None, :]
    if params.lam != 0.0:
        da = delta_a_tilde(params, deltas[:, None], idx[None, :])
        A = A - (params.lam**2 / da)[:, :, None] * U[None, :, :]
    return A


def full_system(params: SystemParams, delta_c: float, U: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Raw amplitude equations for ``x = [t, r, e, f]`` as ``(A, b)``."""
    N = U.shape[0]
    V = math.sqrt(params.Gamma)
    lam = params.lam
    n0 = params.n0
    idx = np.arange(N)
    I = np.eye(N)
    Z = np.zeros((N, N))
    real_dc = delta_c + (n0 - idx) + params.delta
    da = delta_a_tilde(params, delta_c, idx)
    A = np.block(
        [
            [-1j * I, Z, V * U, Z],
            [Z, -1j * I, V * U, Z],
            [0.5 * V * I, 0.5 * V * I, -U * real_dc[None, :], lam * I],
            [Z, Z, lam * U, -np.diag(da)],
        ]
    ).astype(complex)
    b = np.zeros(4 * N, dtype=complex)
    b[n0] = -1j
    b[2 * N + n0] = -0.5 * V
    return A, b


def residual(params: SystemParams, amps: AmplitudeSet, U: np.ndarray) -> float:
    """Relative back-substitution residual of the raw ``4 (n_max + 1)`` system."""
    A, b = full_system(params, amps.delta_c, U)
    x = np.concatenate([amps.t, amps.r, amps.e, amps.f])
    num = np.abs(A @ x - b).max()
    den = np.abs(A).sum(axis=1).max() * np.abs(x).max() + np.abs(b).max()
    return float(num / den)


def _solve_full(params: SystemParams, delta_c: float, U: np.ndarray):
    N = U.shape[0]
    A, b = full_system(params, delta_c, U)
    try:
        x = np.linalg.solve(A, b)
    except np.linalg.LinAlgError:
        da = delta_a_tilde(params, delta_c, np.arange(N))
        raise PoleError(int(np.argmin(np.abs(da))), delta_c) from None
    return x[:N], x[N : 2 * N], x[2 * N : 3 * N], x[3 * N :]


def solve_points(params: SystemParams, deltas, n_max: int, with_residual: bool = False):
    """Exact amplitudes at many detunings sharing one truncation.

    Returns ``(t, r, e, f, res)`` with amplitude arrays of shape
    ``(len(deltas), n_max + 1)``; ``res`` is ``None`` unless requested.
    Points are solved with the same LAPACK call per matrix whatever the batch
    size, so results do not depend on how a grid is chunked.
    """
    deltas = np.atleast_1d(np.asarray(deltas, dtype=float))
    U = np.asarray(cached_overlaps(params.g0, n_max))
    N = n_max + 1
    P = len(deltas)
    V = math.sqrt(params.Gamma)
    poles = _pole_mask(params, deltas, N)
    e = np.empty((P, N), dtype=complex)
    t = np.empty((P, N), dtype=complex)
    r = np.empty((P, N), dtype=complex)
    f = np.zeros((P, N), dtype=complex)
    regular = ~poles
    if regular.any():
        A = reduced_matrices(params, deltas[regular], U)
        rhs = np.zeros((int(regular.sum()), N, 1), dtype=complex)
        rhs[:, params.n0, 0] = V
        try:
            ee = np.linalg.solve(A, rhs)[..., 0]
        except np.linalg.LinAlgError:
            ee = np.empty((len(A), N), dtype=complex)
            for i, (Ai, di) in enumerate(zip(A, deltas[regular])):
                try:
                    ee[i] = np.linalg.solve(Ai, rhs[i, :, 0])
                except np.linalg.LinAlgError:
                    raise ScatteringError(f"singular reduced system at delta_c={di!r}") from None
        # Row-wise reduction: result for a point must not depend on batch size.
        s = (ee[:, None, :] * U[None, :, :]).sum(axis=-1)
        rr = -1j * V * s
        tt = rr.copy()
        tt[:, params.n0] += 1.0
        e[regular], r[regular], t[regular] = ee, rr, tt
        if params.lam != 0.0:
            da = delta_a_tilde(params, deltas[regular][:, None], np.arange(N)[None, :])
            f[regular] = params.lam * s / da
    for i in np.flatnonzero(poles):
        t[i], r[i], e[i], f[i] = _solve_full(params, float(deltas[i]), U)
    res = None
    if with_residual:
        res = np.array(
            [
                residual(params, AmplitudeSet(float(d), t[i], r[i], e[i], f[i], params.n0), U)
                for i, d in enumerate(deltas)
            ]
        )
    return t, r, e, f, res


def solve_exact(params: SystemParams, delta_c: float, cfg: SolverConfig = SolverConfig()) -> AmplitudeSet:
    """Exact amplitudes ``{t_n, r_n, e_n, f_n}`` at one incident detuning."""
    n_max = _resolve_nmax(params, delta_c, cfg)
    t, r, e, f, res = solve_points(params, [delta_c], n_max, with_residual=True)
    return AmplitudeSet(float(delta_c), t[0], r[0], e[0], f[0], params.n0, Geometry.SIDE, float(res[0]))


def series_terms(params: SystemParams, delta_c: float, n_max: int, order: int) -> list[np.ndarray]:
    """Successive ``lam**(2k)`` contributions to ``r_n`` for ``k = 0..order``.

    Term ``k`` is the nested sum with ``k + 1`` cavity denominators and ``k``
    atomic ones; each nested sum over intermediate indices is a matrix product
    truncated at ``n_max``.
    """
    U = np.asarray(cached_overlaps(params.g0, n_max))
    idx = np.arange(n_max + 1)
    dc = delta_c_tilde(params, delta_c, idx)
    cavity = (U / dc[None, :]) @ U.conj().T
    vec = cavity[:, params.n0]
    terms = [-1j * params.Gamma * vec]
    if order == 0:
        return terms
    da = delta_a_tilde(params, delta_c, idx)
    if params.lam != 0.0:
        hits = np.flatnonzero(_near_pole(da[None, :], np.array([delta_c]), n_max + 1)[0])
        if hits.size:
            raise PoleError(int(hits[0]), delta_c)
    step = params.lam**2 * cavity / da[None, :]
    for _ in range(order):
        vec = step @ vec
        terms.append(-1j * params.Gamma * vec)
    return terms


def solve_series(params: SystemParams, delta_c: float, cfg: SolverConfig = SolverConfig()) -> AmplitudeSet:
    """Perturbative amplitudes keeping ``lam**0 .. lam**(2 * series_order)``.

    Intended for ``lam << Gamma, gamma_a``. ``e`` and ``f`` are not part of
    the series and are returned as NaN.
    """
    n_max = _resolve_nmax(params, delta_c, cfg)
    r = np.sum(series_terms(params, delta_c, n_max, cfg.series_order), axis=0)
    t = r.copy()
    t[params.n0] += 1.0
    nan = np.full(n_max + 1, np.nan + 0j)
    return AmplitudeSet(float(delta_c), t, r, nan, nan.copy(), params.n0)


def transmission_reflection(amps: AmplitudeSet) -> tuple[float, float]:
    return float(np.sum(np.abs(amps.t) ** 2)), float(np.sum(np.abs(amps.r) ** 2))


def analytic_reference_g0_zero(params: SystemParams, delta_c: float) -> complex:
    """Closed-form elastic reflection amplitude without optomechanics."""
    if params.g0 != 0:
        raise ValueError("closed form only holds for g0 == 0")
    atom = delta_c - params.delta_ac + 1j * params.gamma_a
    if params.lam == 0:
        self_energy = 0.0
    elif abs(atom) <= POLE_TOL * (1.0 + abs(delta_c)):
        # infinite self-energy: the cavity is fully blocked
        return 0j
    else:
        self_energy = params.lam**2 / atom
    return -1j * params.Gamma / (delta_c + 1j * params.Gamma - self_energy)


def auto_truncate(params: SystemParams, delta_c: float, cfg: SolverConfig = SolverConfig()) -> int:
    """Smallest rung ``n0 + k*step`` whose T and R agree with the next rung to ``convergence_tol``."""
    step = cfg.auto_nmax_step

    def coefficients(n_max):
        t, r, *_ = solve_points(params, [delta_c], n_max)
        return float(np.sum(np.abs(t) ** 2)), float(np.sum(np.abs(r) ** 2))

    n_max = params.n0 + step
    history = [coefficients(n_max)]
    while n_max + step <= cfg.ceiling:
        cur = coefficients(n_max + step)
        prev = history[-1]
        if abs(cur[0] - prev[0]) < cfg.convergence_tol and abs(cur[1] - prev[1]) < cfg.convergence_tol:
            return n_max
        history.append(cur)
        n_max += step
    last = tuple(h[0] for h in history[-2:])
    if len(last) < 2:
        last = (float("nan"),) + last
    raise TruncationError(n_max, last, delta_c)
