"""Sign-aware error metrics for eigenvector estimates.

Eigenvectors are identified only up to sign (one sign per column), so every
metric here minimizes or aligns over sign choices before measuring error.
Columns are matched by index: estimate column k is always compared against
truth column k.
"""

from __future__ import annotations

import itertools
import warnings
from dataclasses import dataclass

import numpy as np

from .errors import InputError, NumericalError
from .validation import as_float_array

_EXHAUSTIVE_MAX_R = 20


def _as_columns(X, name: str) -> np.ndarray:
    arr = as_float_array(X, name)
    if arr.ndim == 1:
        arr = arr[:, None]
    if arr.ndim != 2:
        raise InputError(f"{name} must be a vector or matrix, got shape {arr.shape}")
    return arr


def _check_pair(U_hat, U_star):
    U_hat = _as_columns(U_hat, "U_hat")
    U_star = _as_columns(U_star, "U_star")
    if U_hat.shape != U_star.shape:
        raise InputError(
            f"shape mismatch: U_hat {U_hat.shape} vs U_star {U_star.shape}"
        )
    norms = np.linalg.norm(U_star, axis=0)
    if np.any(np.abs(norms - 1.0) > 1e-6):
        raise InputError("U_star columns must be unit vectors within 1e-6")
    return U_hat, U_star


def d_inf(u_hat, u_star) -> float:
    """Entrywise error min over sign: min(||u* - u||_inf, ||u* + u||_inf)."""
    u_hat, u_star = _check_pair(u_hat, u_star)
    if u_hat.shape[1] != 1:
        raise InputError("d_inf compares single vectors; use d_2inf_signed for bases")
    plus = float(np.max(np.abs(u_star - u_hat)))
    minus = float(np.max(np.abs(u_star + u_hat)))
    return min(plus, minus)


def d_2inf_signed(U_hat, U_star, exhaustive: bool = False) -> float:
    """Two-to-infinity error after per-column sign alignment.

    Non-exhaustive alignment picks each column's sign by the inner product
    with its truth column (ties resolved to +1). Exhaustive alignment takes
    the true minimum over all 2^r sign patterns and is limited to r <= 20.
    """
    U_hat, U_star = _check_pair(U_hat, U_star)
    r = U_hat.shape[1]
    if not exhaustive:
        dots = np.sum(U_hat * U_star, axis=0)
        signs = np.where(dots >= 0.0, 1.0, -1.0)
        diff = U_star - U_hat * signs
        return float(np.max(np.linalg.norm(diff, axis=1)))
    if r > _EXHAUSTIVE_MAX_R:
        raise InputError(
            f"exhaustive sign search requires r <= {_EXHAUSTIVE_MAX_R}, got {r}"
        )
    best = np.inf
    for pattern in itertools.product((1.0, -1.0), repeat=r):
        diff = U_star - U_hat * np.array(pattern)
        best = min(best, float(np.max(np.linalg.norm(diff, axis=1))))
    return best


def frob_subspace_dist(U_hat, U_star) -> float:
    """Frobenius error after the optimal orthogonal alignment of the bases.

    Aligns with the polar factor of M = U*^T U_hat: with M = P S Q^T the
    rotation is Gamma = P Q^T and the distance is ||U* - U_hat Gamma^T||_F.
    When M is numerically zero (all singular values below 1e-12) there is no
    meaningful alignment; a warning is emitted and Gamma = I is used.
    """
    U_hat, U_star = _check_pair(U_hat, U_star)
    M = U_star.T @ U_hat
    P, s, Qt = np.linalg.svd(M)
    if np.all(s < 1e-12):
        warnings.warn(
            "subspaces are numerically orthogonal; using identity alignment",
            stacklevel=2,
        )
        gamma = np.eye(M.shape[0])
    else:
        gamma = P @ Qt
    return float(np.linalg.norm(U_star - U_hat @ gamma.T))


@dataclass(frozen=True)
class MetricReport:
    """All three error metrics for one estimate, plus per-column detail.

    ``d_inf`` is the maximum of the per-column values. The report checks the
    dimensional relation d_2inf >= frob_subspace / sqrt(n), which holds for
    any pair of bases; a violation means a metric implementation bug.
    """

    n: int
    r: int
    per_column_d_inf: tuple[float, ...]
    d_inf: float
    d_2inf: float
    frob_subspace: float


def metric_report(U_hat, U_star, exhaustive: bool = False) -> MetricReport:
    U_hat, U_star = _check_pair(U_hat, U_star)
    n, r = U_hat.shape
    per_column = tuple(
        d_inf(U_hat[:, k], U_star[:, k]) for k in range(r)
    )
    d2i = d_2inf_signed(U_hat, U_star, exhaustive=exhaustive)
    frob = frob_subspace_dist(U_hat, U_star)
    if d2i < frob / np.sqrt(n) - 1e-9:
        raise NumericalError(
            f"metric inconsistency: d_2inf {d2i!r} < frob/sqrt(n) {frob / np.sqrt(n)!r}"
        )
    return MetricReport(
        n=n,
        r=r,
        per_column_d_inf=per_column,
        d_inf=max(per_column),
        d_2inf=d2i,
        frob_subspace=frob,
    )
