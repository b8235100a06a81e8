"""Franck-Condon overlaps between bare and displaced phonon number states.

``U[n, m] = <n| exp[beta (b^dag - b)] |m>`` with the undisplaced state on the
row index and the displaced state on the column index.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy.linalg import expm

ORACLE_MAX_DIM = 200


def default_internal_dim(beta: float, n_max: int) -> int:
    """Construction dimension: exposed rows plus a margin covering the displacement spread."""
    return (n_max + 1) + math.ceil(10.0 * beta * beta) + 20


@dataclass(frozen=True)
class OverlapMatrix:
    beta: float
    dim_external: int
    dim_internal: int
    entries: np.ndarray = field(repr=False, compare=False)

    @property
    def n_max(self) -> int:
        return self.dim_external - 1

    def __array__(self, dtype=None, copy=None):
        return self.entries if dtype is None else self.entries.astype(dtype)


def _check_beta(beta: float) -> float:
    beta = float(beta)
    if not math.isfinite(beta):
        raise ValueError(f"displacement beta must be finite, got {beta!r}")
    return beta


def _lower_triangle(beta: float, dim: int) -> np.ndarray:
    # Each subdiagonal a = n - m is one normalized associated-Laguerre sequence
    # u_k = <k + a|D|k>, run forward in the degree k.
    x = beta * beta
    out = np.zeros((dim, dim))
    for a in range(dim):
        if beta == 0.0:
            u = 1.0 if a == 0 else 0.0
        else:
            log_u0 = -0.5 * x + a * math.log(abs(beta)) - 0.5 * math.lgamma(a + 1)
            u = math.exp(log_u0) if log_u0 > -745.0 else 0.0
            if beta < 0 and a % 2:
                u = -u
        u_prev = 0.0
        for k in range(dim - a):
            out[k + a, k] = u
            u_next = ((2 * k + 1 + a - x) * u - math.sqrt(k * (k + a)) * u_prev) / math.sqrt(
                (k + 1) * (k + 1 + a)
            )
            u_prev, u = u, u_next
    return out


def compute_overlaps(beta: float, n_max: int, dim_internal: int | None = None) -> OverlapMatrix:
    """Overlap matrix ``<n|m~>`` for ``0 <= n, m <= n_max``.

    Entries come from the closed Laguerre form evaluated by its three-term
    recurrence with log-space starting values, so no factorial ratio is ever
    formed. The upper triangle follows from ``U[n, m] = (-1)**(n - m) U[m, n]``.

    Parameters
    ----------
    beta : float
        Displacement ``g0 / Omega``.
    n_max : int
        Largest phonon index exposed.
    dim_internal : int, optional
        Construction dimension, defaults to :func:`default_internal_dim`.
    """
    beta = _check_beta(beta)
    if n_max < 0:
        raise ValueError(f"n_max must be >= 0, got {n_max}")
    if dim_internal is None:
        dim_internal = default_internal_dim(beta, n_max)
    if dim_internal < n_max + 1:
        raise ValueError(f"dim_internal={dim_internal} is smaller than n_max + 1 = {n_max + 1}")
    full = _lower_triangle(beta, dim_internal)
    idx = np.arange(dim_internal)
    sign = np.where((idx[:, None] - idx[None, :]) % 2 == 0, 1.0, -1.0)
    upper = np.triu_indices(dim_internal, 1)
    full[upper] = (sign * full.T)[upper]
    entries = np.ascontiguousarray(full[: n_max + 1, : n_max + 1])
    entries.flags.writeable = False
    return OverlapMatrix(beta, n_max + 1, dim_internal, entries)


@lru_cache(maxsize=64)
def cached_overlaps(beta: float, n_max: int) -> OverlapMatrix:
    return compute_overlaps(beta, n_max)


def oracle_overlaps(beta: float, dim: int, max_dim: int = ORACLE_MAX_DIM) -> np.ndarray:
    """Brute-force displacement operator on a truncated number basis.

    Exponentiates the truncated generator ``beta (b^dag - b)`` directly, so
    entries near the truncation edge are wrong; only a well-inside corner is
    meaningful.
    """
    beta = _check_beta(beta)
    if dim < 1:
        raise ValueError("dim must be >= 1")
    if dim > max_dim:
        raise ValueError(f"oracle dimension {dim} exceeds ceiling {max_dim}")
    lower = np.diag(np.sqrt(np.arange(1, dim, dtype=float)), 1)
    return expm(beta * (lower.T - lower))
