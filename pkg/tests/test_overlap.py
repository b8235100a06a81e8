import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from optoscatter.overlap import (
    OverlapMatrix,
    cached_overlaps,
    compute_overlaps,
    default_internal_dim,
    oracle_overlaps,
)


def test_zero_displacement_is_identity():
    U = compute_overlaps(0.0, 3)
    assert isinstance(U, OverlapMatrix)
    assert np.array_equal(np.asarray(U), np.eye(4))
    assert np.allclose(oracle_overlaps(0.0, 5), np.eye(5), atol=0)


def test_vacuum_overlap_at_unit_beta():
    U = np.asarray(compute_overlaps(1.0, 4))
    assert U[0, 0] == pytest.approx(math.exp(-0.5), abs=1e-15)
    assert abs(U[0, 0] - oracle_overlaps(1.0, 60)[0, 0]) < 1e-12


def test_first_offdiagonal_sign():
    U = np.asarray(compute_overlaps(1.0, 4))
    assert U[0, 1] == -U[1, 0]
    assert U[1, 0] > 0


@pytest.mark.parametrize("beta", [0.1, 0.5, 1.0, 2.0])
def test_matches_matrix_exponential(beta):
    U = np.asarray(compute_overlaps(beta, 9, dim_internal=60))
    ref = oracle_overlaps(beta, 60)[:10, :10]
    assert np.max(np.abs(U - ref)) < 1e-10


def test_corner_is_orthonormal():
    U = oracle_overlaps(1.0, 60)
    corner = U[:10, :] @ U[:10, :].T
    assert np.max(np.abs(corner - np.eye(10))) < 1e-8


@pytest.mark.parametrize("beta", [0.3, 1.0, math.sqrt(2), 3.0])
def test_rows_orthonormal_within_margin(beta):
    n_max = 20
    dim = default_internal_dim(beta, n_max)
    full = np.asarray(compute_overlaps(beta, dim - 1))
    rows = full[: n_max + 1]
    assert np.max(np.abs(rows @ rows.T - np.eye(n_max + 1))) < 1e-8


@pytest.mark.parametrize("beta", [0.5, 1.0, 2.0])
def test_first_column_is_poisson(beta):
    U = np.asarray(compute_overlaps(beta, 15))
    n = np.arange(16)
    poisson = np.exp(-(beta**2) + 2 * n * math.log(beta) - np.array([math.lgamma(k + 1) for k in n]))
    assert np.allclose(U[:, 0] ** 2, poisson, rtol=1e-12, atol=1e-300)


def test_large_index_against_high_precision():
    # Explicit Laguerre form with 40 digits; the recurrence must hold far past factorial overflow.
    beta, n, m = 1.3, 180, 171
    U = np.asarray(compute_overlaps(beta, 200))
    mpmath.mp.dps = 40
    x = mpmath.mpf(beta) ** 2
    a = n - m
    ref = (
        mpmath.exp(-x / 2)
        * mpmath.mpf(beta) ** a
        * mpmath.sqrt(mpmath.factorial(m) / mpmath.factorial(n))
        * mpmath.laguerre(m, a, x)
    )
    assert U[n, m] == pytest.approx(float(ref), rel=1e-9, abs=1e-14)
    assert U[m, n] == pytest.approx((-1) ** a * float(ref), rel=1e-9, abs=1e-14)


def test_entries_are_read_only():
    U = compute_overlaps(0.7, 5)
    with pytest.raises(ValueError):
        U.entries[0, 0] = 1.0


def test_cache_returns_same_object():
    assert cached_overlaps(0.9, 12) is cached_overlaps(0.9, 12)


@pytest.mark.parametrize("beta", [float("nan"), float("inf")])
def test_non_finite_beta_rejected(beta):
    with pytest.raises(ValueError):
        compute_overlaps(beta, 3)


def test_internal_dim_too_small_rejected():
    with pytest.raises(ValueError):
        compute_overlaps(1.0, 10, dim_internal=5)


def test_oracle_dimension_cap():
    with pytest.raises(ValueError):
        oracle_overlaps(1.0, 500)


@settings(max_examples=60, deadline=None)
@given(beta=st.floats(-2.5, 2.5), n_max=st.integers(0, 40))
def test_sign_relation_exact(beta, n_max):
    U = np.asarray(compute_overlaps(beta, n_max))
    n = np.arange(n_max + 1)
    sign = (-1.0) ** (n[:, None] - n[None, :])
    assert np.array_equal(U, sign * U.T)


@settings(max_examples=40, deadline=None)
@given(beta=st.floats(-2.0, 2.0))
def test_negative_beta_is_transpose(beta):
    U = np.asarray(compute_overlaps(beta, 12))
    V = np.asarray(compute_overlaps(-beta, 12))
    assert np.allclose(V, U.T, atol=1e-14)


@settings(max_examples=40, deadline=None)
@given(beta=st.floats(0.0, 2.0), n=st.integers(0, 15), m=st.integers(0, 15))
def test_entries_bounded(beta, n, m):
    U = np.asarray(compute_overlaps(beta, 15))
    assert abs(U[n, m]) <= 1.0 + 1e-12
