"""System parameters and the dressed atom-optomechanical level structure.

All frequencies are detunings measured in units of the mechanical frequency,
so ``Omega == 1`` throughout. Level energies are quoted relative to
``omega_c / 2``.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, replace
from typing import Iterable, Sequence

DEGENERACY_TOL = 1e-9


class Geometry(str, enum.Enum):
    SIDE = "side"
    DIRECT = "direct"


class Branch(str, enum.Enum):
    PLUS = "plus"
    MINUS = "minus"


@dataclass(frozen=True)
class SystemParams:
    """Physical rates of the waveguide + cavity + mirror + atom system.

    ``Gamma`` is the cavity-waveguide decay ``V**2 / v_g``; ``lam`` is the
    atom-cavity coupling (``lambda`` is reserved in Python).
    """

    g0: float = 0.0
    lam: float = 0.0
    Gamma: float = 0.1
    gamma_a: float = 0.0
    delta_ac: float = 0.0
    n0: int = 0
    geometry: Geometry = Geometry.SIDE

    def __post_init__(self):
        for name in ("g0", "lam", "Gamma", "gamma_a", "delta_ac"):
            value = getattr(self, name)
            if not math.isfinite(value):
                raise ValueError(f"{name} must be finite, got {value!r}")
        if self.g0 < 0 or self.lam < 0 or self.gamma_a < 0:
            raise ValueError("g0, lam and gamma_a must be non-negative")
        if self.Gamma <= 0:
            raise ValueError(f"Gamma must be positive, got {self.Gamma}")
        if int(self.n0) != self.n0 or self.n0 < 0:
            raise ValueError(f"n0 must be a non-negative integer, got {self.n0!r}")
        object.__setattr__(self, "n0", int(self.n0))
        object.__setattr__(self, "geometry", Geometry(self.geometry))

    @property
    def delta(self) -> float:
        return polaron_shift(self)

    @property
    def sideband_resolved(self) -> bool:
        return self.Gamma < 1.0

    def warnings(self) -> list[str]:
        if not self.sideband_resolved:
            return [f"Gamma={self.Gamma:g} >= Omega: outside the sideband-resolved regime (Gamma << Omega)"]
        return []

    def with_(self, **changes) -> "SystemParams":
        return replace(self, **changes)


@dataclass(frozen=True)
class DressedLevel:
    n: int
    branch: Branch
    energy: float
    mixing_angle: float


def polaron_shift(params: SystemParams) -> float:
    """Single-photon radiation-pressure shift ``g0**2 / Omega``."""
    return params.g0 * params.g0


def mixing_angle(params: SystemParams) -> float:
    # atan2 keeps theta in [0, pi/2]; a vanishing denominator gives pi/4.
    return 0.5 * math.atan2(2.0 * params.lam, params.delta_ac + params.delta)


def _range(n_range: Iterable[int]) -> Sequence[int]:
    ns = list(n_range)
    if not ns:
        raise ValueError("n_range must be non-empty")
    return ns


def dressed_levels(params: SystemParams, n_range: Iterable[int]) -> list[DressedLevel]:
    """Both dressed branches ``E_n^(+/-)`` for every ``n`` in ``n_range``."""
    delta = params.delta
    half_split = 0.5 * math.hypot(params.delta_ac + delta, 2.0 * params.lam)
    theta = mixing_angle(params)
    levels = []
    for n in _range(n_range):
        centre = n - 0.5 * delta
        levels.append(DressedLevel(n, Branch.PLUS, centre + half_split, theta))
        levels.append(DressedLevel(n, Branch.MINUS, centre - half_split, theta))
    return levels


def rabi_limit_levels(params: SystemParams, n_range: Iterable[int]) -> list[DressedLevel]:
    """Asymptotic levels ``n - delta/2 +/- lam`` valid for ``lam >> delta``."""
    delta = params.delta
    levels = []
    for n in _range(n_range):
        centre = n - 0.5 * delta
        levels.append(DressedLevel(n, Branch.PLUS, centre + params.lam, math.pi / 4))
        levels.append(DressedLevel(n, Branch.MINUS, centre - params.lam, math.pi / 4))
    return levels


def degenerate_limit_levels(params: SystemParams, n_range: Iterable[int], m: int) -> list[DressedLevel]:
    """Perturbative near-degenerate pair when the polaron shift equals ``m`` phonons.

    For each ``n`` returns ``E_n^(+)`` and ``E_{n+m}^(-)``, the atomic level
    ``|0,e,n>`` and the photonic level ``|1,g,(n+m)~>`` repelled by the
    second-order shift ``lam**2 / (delta_ac + delta)``. With ``delta_ac == 0``
    these are ``n +/- lam**2/delta``.
    """
    delta = params.delta
    if m < 1 or abs(delta - m) > DEGENERACY_TOL:
        raise ValueError(f"polaron shift {delta!r} is not within {DEGENERACY_TOL} of m={m}")
    gap = params.delta_ac + delta
    shift = params.lam**2 / gap
    theta = mixing_angle(params)
    levels = []
    for n in _range(n_range):
        levels.append(DressedLevel(n, Branch.PLUS, n + 0.5 * params.delta_ac + shift, theta))
        levels.append(
            DressedLevel(n + m, Branch.MINUS, n + m - delta - 0.5 * params.delta_ac - shift, theta)
        )
    return levels
