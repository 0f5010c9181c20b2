"""Entrywise refinement of spectral eigenvector estimates.

The spectral estimate of a planted eigenvector is accurate in l2 but can be
poor entrywise when the eigenvector is localized. These routines rebuild each
large coordinate from sign-aligned row sums of the observation over the
selected support, which removes the coherence dependence from the entrywise
error, and keep the spectral value on small coordinates.

Eigenvalue debiasing and the plug-in noise-variance estimate live here too,
since the refinement threshold needs both.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .errors import InputError, SupportSelectionError
from .linalg import (
    EigenPair,
    Spectrum,
    conjugate,
    haar_orthogonal,
    top_eigenpairs,
)
from .support import SupportSelection, alpha_grid, select_support
from .validation import as_symmetric_matrix, check_positive_int

FALLBACK_NONE = "none"
FALLBACK_SPECTRAL = "spectral_fallback"


class DebiasedEigenvalue(NamedTuple):
    value: float
    clamped: bool


@dataclass(frozen=True, eq=False)
class RefinedEstimate:
    """Result of one refinement run.

    ``refined_mask`` marks the coordinates rebuilt from row sums (the rest
    keep their spectral values); ``fallback`` is ``"spectral_fallback"`` when
    the procedure could not improve on the spectral estimate and returned it
    unchanged. ``selection`` is the support selection used, in the frame the
    selection was made in (the rotated frame for the conjugated procedures);
    it is None when no admissible support existed. ``refined_values`` is the
    full row-sum reconstruction in the same frame as ``u_hat`` (None under a
    fallback): ``u_hat`` equals ``refined_values`` on the mask and the
    spectral vector off it.
    """

    u_hat: np.ndarray
    lambda_hat: float
    selection: SupportSelection | None
    s_hat: float
    refined_mask: np.ndarray
    refined_values: np.ndarray | None
    fallback: str

    @property
    def refined_count(self) -> int:
        return int(np.count_nonzero(self.refined_mask))


def debias_lambda(lambda_raw: float, n: int, sigma2: float) -> DebiasedEigenvalue:
    """Invert the noise-induced outward bias of a raw leading eigenvalue.

    Solves lambda_raw = t + n sigma2 / t for the signal strength t, keeping
    the sign of ``lambda_raw``. When lambda_raw^2 < 4 n sigma2 the quadratic
    has no real root; the discriminant is clamped to zero and the result is
    flagged ``clamped``.
    """
    n = check_positive_int(n, "n")
    lam = float(lambda_raw)
    if not math.isfinite(lam):
        raise InputError(f"lambda_raw must be finite, got {lambda_raw!r}")
    s2 = float(sigma2)
    if not (math.isfinite(s2) and s2 >= 0.0):
        raise InputError(f"sigma2 must be a nonnegative float, got {sigma2!r}")
    disc = lam * lam - 4.0 * n * s2
    clamped = disc < 0.0
    root = math.sqrt(max(disc, 0.0))
    value = math.copysign(0.5 * (abs(lam) + root), lam) if lam != 0.0 else 0.0
    return DebiasedEigenvalue(value=value, clamped=clamped)


def estimate_sigma2(Y, r: int, spectrum: Spectrum | None = None) -> float:
    """Plug-in noise variance from the residual of the top-r approximation.

    Averages the squared residual over the n(n+1)/2 entries on and above the
    diagonal after removing the rank-r spectral approximation built from the
    ``r`` largest-|eigenvalue| pairs. A precomputed ``spectrum`` of Y (at
    least r pairs) skips the internal eigensolve.
    """
    Y = as_symmetric_matrix(Y, "Y")
    n = Y.shape[0]
    r = check_positive_int(r, "r")
    if r > n:
        raise InputError(f"r must be <= n = {n}, got {r}")
    if spectrum is None:
        spectrum = top_eigenpairs(Y, r)
    elif len(spectrum) < r:
        raise InputError(f"spectrum holds {len(spectrum)} pairs, need at least {r}")
    U = spectrum.basis[:, :r]
    lam = spectrum.values[:r]
    R = Y - (U * lam) @ U.T
    total = float(np.sum(R * R)) + float(np.sum(np.diag(R) ** 2))
    return total / (n * (n + 1))


def _support_row_sums(work: np.ndarray, sel: SupportSelection):
    """Row sums of the sign-conjugated matrix over the support, and their
    restriction summed.

    With Y~ = diag(q) work diag(q), row j's sum over the support is
    q_j * (work[:, I] @ q_I), computed without materializing Y~.
    """
    idx = sel.support
    ytail = work[:, idx] @ sel.q[idx]
    row_sums = sel.q * ytail
    s_squared = float(np.sum(row_sums[idx]))
    return row_sums, s_squared


def _resolve_sigma2(sigma2, Y, r, spectrum):
    if isinstance(sigma2, str):
        if sigma2 != "auto":
            raise InputError(f"sigma2 must be a float or 'auto', got {sigma2!r}")
        return estimate_sigma2(Y, r, spectrum=spectrum)
    s2 = float(sigma2)
    if not (math.isfinite(s2) and s2 >= 0.0):
        raise InputError(f"sigma2 must be a nonnegative float, got {sigma2!r}")
    return s2


def _negate_spectrum(spectrum: Spectrum | None) -> Spectrum | None:
    if spectrum is None:
        return None
    return Spectrum(tuple(EigenPair(-p.value, p.vector) for p in spectrum.pairs))


def refine_rank1(
    Y,
    lambda_hat: float,
    beta: float = 0.0,
    mode: str = "grid",
    sigma2="auto",
    spectrum: Spectrum | None = None,
) -> RefinedEstimate:
    """Refine the leading eigenvector of a rank-1 spike entrywise.

    Parameters
    ----------
    Y : array_like
        Symmetric observation.
    lambda_hat : float
        Nonzero signal-strength estimate; its sign decides whether Y is
        negated before the eigensolve.
    beta : float
        Margin parameter of the support selection's gap condition.
    mode : str
        ``"grid"`` for the threshold ladder, ``"median"`` for the median rule.
    sigma2 : float or "auto"
        Noise variance for the refinement threshold; ``"auto"`` uses the
        rank-1 plug-in estimate.
    spectrum : Spectrum, optional
        Precomputed ``top_eigenpairs(Y, 1)`` of Y as passed (not negated);
        skips the internal eigensolve.

    Notes
    -----
    Coordinates with |u_j| above (sigma / |lambda_hat|) log n are rebuilt as
    sign-corrected averaged row sums scaled by 1 / (S_hat sqrt(|lambda_hat|));
    the rest keep their spectral values. A nonpositive S_hat^2 returns the
    spectral vector unchanged with ``fallback = "spectral_fallback"``.
    """
    Y = as_symmetric_matrix(Y, "Y")
    n = Y.shape[0]
    lam = float(lambda_hat)
    if not math.isfinite(lam) or lam == 0.0:
        raise InputError(f"lambda_hat must be finite and nonzero, got {lambda_hat!r}")

    negate = lam < 0.0
    work = -Y if negate else Y
    work_spectrum = _negate_spectrum(spectrum) if negate else spectrum
    if work_spectrum is None:
        work_spectrum = top_eigenpairs(work, 1)
    u = work_spectrum[0].vector

    grid = alpha_grid(n) if mode == "grid" else None
    sel = select_support(u, grid=grid, beta=beta, mode=mode)
    row_sums, s_squared = _support_row_sums(work, sel)
    sigma2_val = _resolve_sigma2(sigma2, work, 1, work_spectrum)

    if s_squared <= 0.0:
        return RefinedEstimate(
            u_hat=u.copy(),
            lambda_hat=lam,
            selection=sel,
            s_hat=0.0,
            refined_mask=np.zeros(n, dtype=bool),
            refined_values=None,
            fallback=FALLBACK_SPECTRAL,
        )

    s_hat = math.sqrt(s_squared)
    lam_abs = abs(lam)
    v = row_sums / (s_hat * math.sqrt(lam_abs))
    refined_values = sel.q * v
    threshold = math.sqrt(sigma2_val) / lam_abs * math.log(n)
    mask = np.abs(u) > threshold
    u_hat = np.where(mask, refined_values, u)
    return RefinedEstimate(
        u_hat=u_hat,
        lambda_hat=lam,
        selection=sel,
        s_hat=s_hat,
        refined_mask=mask,
        refined_values=refined_values,
        fallback=FALLBACK_NONE,
    )


def refine_rank_r(
    Y,
    r: int,
    k: int,
    lambda_hat_k: float,
    sigma2="auto",
    rng: np.random.Generator | None = None,
    spectrum: Spectrum | None = None,
) -> RefinedEstimate:
    """Refine the k-th planted eigenvector (1-based, by |eigenvalue| rank).

    A fresh Haar rotation delocalizes the basis; the k-th rotated eigenvector
    drives an entrywise sign correction of the rotated observation, whose
    averaged row sums over the support are rotated back onto the large
    coordinates of the unrotated estimate. No admissible support or a
    nonpositive S_hat^2 falls back to the rotated-back spectral column.

    ``spectrum``, if given, is ``top_eigenpairs(Y, r)`` of Y as passed and is
    used only by the plug-in variance estimate.
    """
    Y = as_symmetric_matrix(Y, "Y")
    n = Y.shape[0]
    r = check_positive_int(r, "r")
    if r > n:
        raise InputError(f"r must be <= n = {n}, got {r}")
    k = check_positive_int(k, "k")
    if k > r:
        raise InputError(f"k must be <= r = {r}, got {k}")
    lam = float(lambda_hat_k)
    if not math.isfinite(lam) or lam == 0.0:
        raise InputError(f"lambda_hat_k must be finite and nonzero, got {lambda_hat_k!r}")
    if rng is None:
        raise InputError("rng is required: the procedure draws a Haar rotation")

    work = -Y if lam < 0.0 else Y
    grid = alpha_grid(n)
    sigma2_val = _resolve_sigma2(sigma2, Y, r, spectrum)

    H = haar_orthogonal(n, rng)
    B = conjugate(work, H)
    rotated = top_eigenpairs(B, r)
    ut = rotated[k - 1].vector
    spectral_col = H.T @ ut

    q = np.where(ut >= 0.0, 1.0, -1.0)
    abs_ut = np.abs(ut)
    log_n = math.log(n)
    alpha_hat = None
    for alpha in grid.values:
        count = int(np.count_nonzero(abs_ut >= alpha))
        if count >= 1.0 / (alpha * alpha * log_n * log_n):
            alpha_hat = alpha
            break
    if alpha_hat is None:
        return RefinedEstimate(
            u_hat=spectral_col,
            lambda_hat=lam,
            selection=None,
            s_hat=0.0,
            refined_mask=np.zeros(n, dtype=bool),
            refined_values=None,
            fallback=FALLBACK_SPECTRAL,
        )

    support = np.flatnonzero(abs_ut >= alpha_hat)
    sel = SupportSelection(
        alpha_hat=float(alpha_hat),
        support=support,
        q=q,
        mode="grid",
        relaxed_gap=False,
    )
    row_sums, s_squared = _support_row_sums(B, sel)
    if s_squared <= 0.0:
        return RefinedEstimate(
            u_hat=spectral_col,
            lambda_hat=lam,
            selection=sel,
            s_hat=0.0,
            refined_mask=np.zeros(n, dtype=bool),
            refined_values=None,
            fallback=FALLBACK_SPECTRAL,
        )

    s_hat = math.sqrt(s_squared)
    lam_abs = abs(lam)
    v = row_sums / (s_hat * math.sqrt(lam_abs))
    refined_source = H.T @ (q * v)
    threshold = math.sqrt(sigma2_val) / lam_abs * log_n
    mask = np.abs(spectral_col) > threshold
    u_hat = np.where(mask, refined_source, spectral_col)
    return RefinedEstimate(
        u_hat=u_hat,
        lambda_hat=lam,
        selection=sel,
        s_hat=s_hat,
        refined_mask=mask,
        refined_values=refined_source,
        fallback=FALLBACK_NONE,
    )


def refine_rank1_conjugated(
    Y,
    lambda_hat: float,
    beta: float = 0.0,
    mode: str = "median",
    sigma2="auto",
    rng: np.random.Generator | None = None,
    spectrum: Spectrum | None = None,
) -> RefinedEstimate:
    """Rank-1 refinement behind a fresh Haar rotation.

    The observation is conjugated by a Haar rotation, so support selection
    and the row-sum aggregation see a delocalized eigenvector regardless of
    how concentrated the planted one is. The coordinate test that decides
    which entries receive the rebuilt values runs on the unrotated spectral
    vector: large original-frame coordinates, whose spectral values carry
    the coherence-driven error, get the rotated-back row-sum reconstruction,
    while small ones keep their spectral values.

    Accepts the same ``beta`` / ``mode`` / ``sigma2`` controls as
    ``refine_rank1``; ``rng`` (required) supplies the rotation. ``spectrum``,
    if given, is ``top_eigenpairs(Y, 1)`` of Y as passed and only feeds the
    plug-in variance estimate. The returned ``selection`` lives in the
    rotated frame; ``u_hat``, ``refined_mask`` and ``refined_values`` are in
    the original frame. No admissible support or a nonpositive S_hat^2 falls
    back to the unrotated spectral vector.
    """
    Y = as_symmetric_matrix(Y, "Y")
    n = Y.shape[0]
    lam = float(lambda_hat)
    if not math.isfinite(lam) or lam == 0.0:
        raise InputError(f"lambda_hat must be finite and nonzero, got {lambda_hat!r}")
    if rng is None:
        raise InputError("rng is required: the procedure draws a Haar rotation")

    negate = lam < 0.0
    work = -Y if negate else Y
    H = haar_orthogonal(n, rng)
    B = conjugate(work, H)
    rotated = top_eigenpairs(B, 1)
    ut = rotated[0].vector
    u_orig = H.T @ ut

    if spectrum is not None:
        work_spectrum = _negate_spectrum(spectrum) if negate else spectrum
    else:
        work_spectrum = Spectrum((EigenPair(rotated[0].value, u_orig),))
    sigma2_val = _resolve_sigma2(sigma2, work, 1, work_spectrum)

    try:
        grid = alpha_grid(n) if mode == "grid" else None
        sel = select_support(ut, grid=grid, beta=beta, mode=mode)
    except SupportSelectionError:
        return RefinedEstimate(
            u_hat=u_orig,
            lambda_hat=lam,
            selection=None,
            s_hat=0.0,
            refined_mask=np.zeros(n, dtype=bool),
            refined_values=None,
            fallback=FALLBACK_SPECTRAL,
        )
    row_sums, s_squared = _support_row_sums(B, sel)
    if s_squared <= 0.0:
        return RefinedEstimate(
            u_hat=u_orig,
            lambda_hat=lam,
            selection=sel,
            s_hat=0.0,
            refined_mask=np.zeros(n, dtype=bool),
            refined_values=None,
            fallback=FALLBACK_SPECTRAL,
        )

    s_hat = math.sqrt(s_squared)
    lam_abs = abs(lam)
    v = row_sums / (s_hat * math.sqrt(lam_abs))
    refined_source = H.T @ (sel.q * v)
    threshold = math.sqrt(sigma2_val) / lam_abs * math.log(n)
    mask = np.abs(u_orig) > threshold
    u_hat = np.where(mask, refined_source, u_orig)
    return RefinedEstimate(
        u_hat=u_hat,
        lambda_hat=lam,
        selection=sel,
        s_hat=s_hat,
        refined_mask=mask,
        refined_values=refined_source,
        fallback=FALLBACK_NONE,
    )


def lambda_from_support(Y_tilde, support, s_hat: float, n: int, sigma2: float) -> float:
    """Signal-strength estimate from support row sums of the sign-conjugated
    observation.

    Returns (sum_j (sum_{k in support} Ytilde_jk)^2 - |support| n sigma2) / s_hat^2.
    Requires s_hat > 0 and a nonempty, in-range, duplicate-free support.
    """
    Y_tilde = as_symmetric_matrix(Y_tilde, "Y_tilde")
    if n != Y_tilde.shape[0]:
        raise InputError(f"n = {n} does not match Y_tilde shape {Y_tilde.shape}")
    idx = np.asarray(support, dtype=np.int64)
    if idx.ndim != 1 or idx.size == 0:
        raise InputError("support must be a nonempty 1-d index array")
    if np.any(idx < 0) or np.any(idx >= n):
        raise InputError(f"support indices must lie in [0, {n})")
    if np.unique(idx).size != idx.size:
        raise InputError("support contains duplicate indices")
    s = float(s_hat)
    if not (math.isfinite(s) and s > 0.0):
        raise InputError(f"s_hat must be positive, got {s_hat!r}")
    s2 = float(sigma2)
    if not (math.isfinite(s2) and s2 >= 0.0):
        raise InputError(f"sigma2 must be a nonnegative float, got {sigma2!r}")
    row_sums = Y_tilde[:, idx].sum(axis=1)
    return (float(np.sum(row_sums**2)) - idx.size * n * s2) / (s * s)
