"""Input validation helpers shared across the package.

All helpers raise :class:`~eigrefine.errors.InputError` with a message naming
the offending argument, and return validated float64 arrays so downstream code
can assume clean inputs.
"""

from __future__ import annotations

import numpy as np

from .errors import InputError


def as_float_array(x, name: str = "array") -> np.ndarray:
    arr = np.asarray(x, dtype=np.float64)
    if not np.all(np.isfinite(arr)):
        raise InputError(f"{name} contains non-finite entries")
    return arr


def as_symmetric_matrix(A, name: str = "A") -> np.ndarray:
    """Validate a square, finite, exactly symmetric float64 matrix.

    Matrices built by this package are mirrored or averaged at construction
    time, so symmetry is checked exactly. Callers holding only approximately
    symmetric data should pass it through :func:`symmetrize` first.
    """
    arr = as_float_array(A, name)
    if arr.ndim != 2 or arr.shape[0] != arr.shape[1]:
        raise InputError(f"{name} must be a square matrix, got shape {arr.shape}")
    if arr.shape[0] == 0:
        raise InputError(f"{name} must be non-empty")
    if not np.array_equal(arr, arr.T):
        raise InputError(f"{name} is not symmetric")
    return np.ascontiguousarray(arr)


def symmetrize(A, name: str = "A", tol: float | None = None) -> np.ndarray:
    """Average a nearly symmetric matrix into an exactly symmetric one.

    If ``tol`` is given, asymmetry beyond ``tol`` (absolute, entrywise) is an
    input error rather than something to silently repair.
    """
    arr = as_float_array(A, name)
    if arr.ndim != 2 or arr.shape[0] != arr.shape[1]:
        raise InputError(f"{name} must be a square matrix, got shape {arr.shape}")
    if tol is not None:
        gap = float(np.max(np.abs(arr - arr.T))) if arr.size else 0.0
        if gap > tol:
            raise InputError(
                f"{name} is asymmetric beyond tolerance: max |A - A.T| = {gap:.3e} > {tol:.3e}"
            )
    return (arr + arr.T) / 2.0


def check_vector(v, n: int | None = None, name: str = "v") -> np.ndarray:
    arr = as_float_array(v, name)
    if arr.ndim != 1:
        raise InputError(f"{name} must be one-dimensional, got shape {arr.shape}")
    if n is not None and arr.shape[0] != n:
        raise InputError(f"{name} must have length {n}, got {arr.shape[0]}")
    return arr


def check_unit_vector(v, tol: float = 1e-8, name: str = "v") -> np.ndarray:
    arr = check_vector(v, name=name)
    nrm = float(np.linalg.norm(arr))
    if abs(nrm - 1.0) > tol:
        raise InputError(f"{name} must have unit norm within {tol:g}, got {nrm!r}")
    return arr


def check_orthonormal_columns(U, tol: float = 1e-8, name: str = "U") -> np.ndarray:
    arr = as_float_array(U, name)
    if arr.ndim != 2:
        raise InputError(f"{name} must be a matrix, got shape {arr.shape}")
    n, r = arr.shape
    if r > n:
        raise InputError(f"{name} has more columns than rows ({r} > {n})")
    gram = arr.T @ arr
    err = float(np.max(np.abs(gram - np.eye(r))))
    if err > tol:
        raise InputError(
            f"{name} columns are not orthonormal within {tol:g}: max Gram deviation {err:.3e}"
        )
    return arr


def check_sign_vector(q, n: int | None = None, name: str = "q") -> np.ndarray:
    arr = check_vector(q, n=n, name=name)
    if not np.all(np.abs(arr) == 1.0):
        raise InputError(f"{name} entries must all be +1 or -1")
    return arr


def check_positive_int(value, name: str, minimum: int = 1) -> int:
    try:
        ivalue = int(value)
    except (TypeError, ValueError):
        raise InputError(f"{name} must be an integer, got {value!r}") from None
    if ivalue != value:
        raise InputError(f"{name} must be an integer, got {value!r}")
    if ivalue < minimum:
        raise InputError(f"{name} must be >= {minimum}, got {ivalue}")
    return ivalue
