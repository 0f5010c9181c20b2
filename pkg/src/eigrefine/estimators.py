"""Estimator classes over the functional core, in the fit/attributes idiom.

Each estimator consumes one symmetric observation matrix via ``fit`` and
exposes its results as trailing-underscore attributes. Hyperparameters are
plain constructor arguments, so ``get_params`` / ``set_params`` and
``clone`` work as usual.
"""

from __future__ import annotations

import math

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.exceptions import NotFittedError

from . import linalg
from .errors import InputError
from .refinement import (
    FALLBACK_SPECTRAL,
    debias_lambda,
    estimate_sigma2,
    lambda_from_support,
    refine_rank1,
    refine_rank_r,
)
from .support import ALPHA_MODES, select_support
from .validation import as_symmetric_matrix, check_positive_int

EIG_ESTIMATORS = ("debiased", "raw", "support_sum")
SIGMA_AUTO = "auto"


def _check_fitted(est, attr: str):
    if not hasattr(est, attr):
        raise NotFittedError(
            f"this {type(est).__name__} instance is not fitted yet; call fit first"
        )


class SpectralEigenvectors(BaseEstimator):
    """Top-r eigenpairs by absolute eigenvalue of a symmetric matrix.

    Parameters
    ----------
    r : int
        Number of eigenpairs to extract.
    tol : float
        Residual tolerance passed to the eigensolver.

    Attributes
    ----------
    components_ : ndarray of shape (n, r)
        Sign-normalized eigenvectors as columns, |eigenvalue| descending.
    eigenvalues_ : ndarray of shape (r,)
        Matching eigenvalues.
    spectrum_ : Spectrum
        The underlying decomposition object.
    """

    def __init__(self, r: int = 1, tol: float = 1e-10):
        self.r = r
        self.tol = tol

    def fit(self, X, y=None):
        X = as_symmetric_matrix(X, "X")
        spectrum = linalg.top_eigenpairs(X, self.r, tol=self.tol)
        self.spectrum_ = spectrum
        self.components_ = spectrum.basis
        self.eigenvalues_ = spectrum.values
        self.n_features_in_ = X.shape[0]
        return self

    def transform(self, X):
        """Project the columns of a conformable matrix onto the fitted basis."""
        _check_fitted(self, "components_")
        X = np.asarray(X, dtype=np.float64)
        if X.ndim == 1:
            X = X[:, None]
        if X.shape[0] != self.n_features_in_:
            raise InputError(
                f"X has {X.shape[0]} rows, expected {self.n_features_in_}"
            )
        return self.components_.T @ X


class RefinedRankOne(BaseEstimator):
    """Entrywise-refined leading eigenvector of a rank-1 spike.

    Parameters
    ----------
    beta : float
        Margin parameter of the support selection.
    alpha_mode : str
        ``"grid"`` or ``"median"`` threshold choice.
    sigma2 : float or "auto"
        Noise variance; ``"auto"`` uses the rank-1 plug-in estimate.
    eig_estimator : str
        Signal-strength rule: ``"debiased"`` inverts the eigenvalue bias,
        ``"raw"`` uses the leading eigenvalue as is, ``"support_sum"``
        re-estimates from support row sums.
    lambda_hat : float, optional
        Explicit signal strength; overrides ``eig_estimator``.
    conjugate : bool
        Conjugate the observation by a fresh Haar rotation before refining
        and rotate the estimate back. Requires ``random_state`` for
        reproducibility.
    random_state : int, Generator, or None
        Source of the Haar rotation.
    tol : float
        Eigensolver residual tolerance.

    Attributes
    ----------
    u_hat_ : ndarray of shape (n,)
        Refined eigenvector estimate, in the original coordinates.
    lambda_raw_ : float
        Leading eigenvalue of the (possibly rotated) observation.
    lambda_hat_ : float
        Signal strength actually used by the refinement.
    lambda_clamped_ : bool
        Whether debiasing clamped a negative discriminant.
    sigma2_hat_ : float
        Noise variance used (plug-in value under ``"auto"``).
    alpha_hat_, support_size_, relaxed_gap_ : threshold diagnostics
        (None / 0 / False under a spectral fallback with no selection).
    refined_count_ : int
        Number of coordinates rebuilt from row sums.
    fallback_ : str
        ``"none"`` or ``"spectral_fallback"``.
    """

    def __init__(
        self,
        beta: float = 0.0,
        alpha_mode: str = "grid",
        sigma2="auto",
        eig_estimator: str = "debiased",
        lambda_hat: float | None = None,
        conjugate: bool = False,
        random_state=None,
        tol: float = 1e-10,
    ):
        self.beta = beta
        self.alpha_mode = alpha_mode
        self.sigma2 = sigma2
        self.eig_estimator = eig_estimator
        self.lambda_hat = lambda_hat
        self.conjugate = conjugate
        self.random_state = random_state
        self.tol = tol

    def fit(self, X, y=None):
        X = as_symmetric_matrix(X, "X")
        n = X.shape[0]
        if self.alpha_mode not in ALPHA_MODES:
            raise InputError(
                f"alpha_mode must be one of {ALPHA_MODES}, got {self.alpha_mode!r}"
            )
        if self.eig_estimator not in EIG_ESTIMATORS:
            raise InputError(
                f"eig_estimator must be one of {EIG_ESTIMATORS}, got {self.eig_estimator!r}"
            )

        if self.conjugate:
            if self.random_state is None:
                raise InputError(
                    "conjugate=True draws a Haar rotation and needs an explicit "
                    "random_state for a reproducible fit"
                )
            rng = np.random.default_rng(self.random_state)
            H = linalg.haar_orthogonal(n, rng)
            work = linalg.conjugate(X, H)
        else:
            H = None
            work = X

        spectrum = linalg.top_eigenpairs(work, 1, tol=self.tol)
        lambda_raw = spectrum[0].value
        if self.sigma2 == SIGMA_AUTO:
            sigma2 = estimate_sigma2(work, 1, spectrum=spectrum)
        else:
            sigma2 = float(self.sigma2)
            if not (math.isfinite(sigma2) and sigma2 >= 0.0):
                raise InputError(f"sigma2 must be nonnegative, got {self.sigma2!r}")

        clamped = False
        if self.lambda_hat is not None:
            lam = float(self.lambda_hat)
        elif self.eig_estimator == "raw":
            lam = lambda_raw
        elif self.eig_estimator == "debiased":
            deb = debias_lambda(lambda_raw, n, sigma2)
            lam, clamped = deb.value, deb.clamped
        else:
            lam = self._support_sum_lambda(work, spectrum, sigma2)

        self.lambda_raw_ = float(lambda_raw)
        self.lambda_hat_ = float(lam) if lam is not None else None
        self.lambda_clamped_ = clamped
        self.sigma2_hat_ = float(sigma2)
        self.n_features_in_ = n

        if lam is None or lam == 0.0 or not math.isfinite(lam):
            # No usable signal strength: keep the spectral vector.
            u = spectrum[0].vector
            self._finish(u, H, None, 0, FALLBACK_SPECTRAL)
            return self

        result = refine_rank1(
            work, lam, beta=self.beta, mode=self.alpha_mode,
            sigma2=sigma2, spectrum=spectrum,
        )
        if H is None or result.refined_values is None:
            self._finish(
                result.u_hat, H, result.selection, result.refined_count,
                result.fallback,
            )
            return self

        # Selection and row-sum aggregation happen in the rotated frame, but
        # the keep-or-replace rule reads coordinate sizes in the original one:
        # rotated entries are all near 1/sqrt(n), so thresholding there would
        # leave essentially every coordinate spectral.
        u_orig = H.T @ spectrum[0].vector
        source = H.T @ result.refined_values
        threshold = math.sqrt(sigma2) / abs(lam) * math.log(n)
        mask = np.abs(u_orig) > threshold
        self.u_hat_ = np.where(mask, source, u_orig)
        self.alpha_hat_ = result.selection.alpha_hat
        self.support_size_ = result.selection.size
        self.relaxed_gap_ = result.selection.relaxed_gap
        self.refined_count_ = int(np.count_nonzero(mask))
        self.fallback_ = result.fallback
        return self

    def _support_sum_lambda(self, work, spectrum, sigma2):
        """Signal strength from support row sums of the sign-conjugated matrix."""
        u = spectrum[0].vector
        sel = select_support(u, beta=self.beta, mode=self.alpha_mode)
        y_tilde = linalg.sign_conjugate(work, sel.q)
        block = y_tilde[np.ix_(sel.support, sel.support)]
        s_squared = float(block.sum())
        if s_squared <= 0.0:
            return None
        s_hat = math.sqrt(s_squared)
        return lambda_from_support(
            y_tilde, sel.support, s_hat, work.shape[0], sigma2
        )

    def _finish(self, u_work, H, selection, refined_count, fallback):
        self.u_hat_ = H.T @ u_work if H is not None else u_work.copy()
        self.alpha_hat_ = selection.alpha_hat if selection is not None else None
        self.support_size_ = selection.size if selection is not None else None
        self.relaxed_gap_ = (
            selection.relaxed_gap if selection is not None else False
        )
        self.refined_count_ = int(refined_count)
        self.fallback_ = fallback


class RefinedRankR(BaseEstimator):
    """Column-by-column entrywise refinement of a rank-r spike.

    Each column gets a fresh Haar rotation drawn from ``random_state``, so a
    reproducible fit needs an explicit seed or generator.

    Parameters
    ----------
    r : int
        Number of planted eigenpairs.
    sigma2 : float or "auto"
        Noise variance; ``"auto"`` uses the rank-r plug-in estimate.
    eig_estimator : str
        ``"debiased"`` or ``"raw"`` per-column signal strengths.
    lambda_hats : sequence of float, optional
        Explicit per-column signal strengths; overrides ``eig_estimator``.
    random_state : int, Generator, or None
    tol : float
        Eigensolver residual tolerance.

    Attributes
    ----------
    components_ : ndarray of shape (n, r)
        Refined eigenvector estimates as columns.
    eigenvalues_raw_ : ndarray of shape (r,)
        Top-r eigenvalues of the observation, |value| descending.
    lambda_hats_ : tuple of float, length r
        Signal strengths used per column.
    lambda_clamped_ : tuple of bool, length r
    sigma2_hat_ : float
    alpha_hats_, support_sizes_, fallbacks_, refined_counts_ : per-column
        diagnostics (entries None / 0 where a column fell back with no
        selection).
    """

    def __init__(
        self,
        r: int = 2,
        sigma2="auto",
        eig_estimator: str = "debiased",
        lambda_hats=None,
        random_state=None,
        tol: float = 1e-10,
    ):
        self.r = r
        self.sigma2 = sigma2
        self.eig_estimator = eig_estimator
        self.lambda_hats = lambda_hats
        self.random_state = random_state
        self.tol = tol

    def fit(self, X, y=None):
        X = as_symmetric_matrix(X, "X")
        n = X.shape[0]
        r = check_positive_int(self.r, "r")
        if r > n:
            raise InputError(f"r must be <= n = {n}, got {r}")
        if self.eig_estimator not in ("debiased", "raw"):
            raise InputError(
                "eig_estimator must be 'debiased' or 'raw' for the rank-r "
                f"procedure, got {self.eig_estimator!r}"
            )
        if self.random_state is None:
            raise InputError(
                "the rank-r procedure draws Haar rotations and needs an "
                "explicit random_state for a reproducible fit"
            )
        rng = np.random.default_rng(self.random_state)

        spectrum = linalg.top_eigenpairs(X, r, tol=self.tol)
        if self.sigma2 == SIGMA_AUTO:
            sigma2 = estimate_sigma2(X, r, spectrum=spectrum)
        else:
            sigma2 = float(self.sigma2)
            if not (math.isfinite(sigma2) and sigma2 >= 0.0):
                raise InputError(f"sigma2 must be nonnegative, got {self.sigma2!r}")

        raw = spectrum.values
        clamped = [False] * r
        if self.lambda_hats is not None:
            lams = [float(v) for v in self.lambda_hats]
            if len(lams) != r:
                raise InputError(
                    f"lambda_hats must have length r = {r}, got {len(lams)}"
                )
        elif self.eig_estimator == "raw":
            lams = [float(v) for v in raw]
        else:
            lams = []
            for v in raw:
                deb = debias_lambda(float(v), n, sigma2)
                lams.append(deb.value)
                clamped[len(lams) - 1] = deb.clamped

        columns = np.empty((n, r), dtype=np.float64)
        alpha_hats: list[float | None] = []
        support_sizes: list[int | None] = []
        fallbacks: list[str] = []
        refined_counts: list[int] = []
        for k in range(1, r + 1):
            lam = lams[k - 1]
            if lam == 0.0 or not math.isfinite(lam):
                columns[:, k - 1] = spectrum[k - 1].vector
                alpha_hats.append(None)
                support_sizes.append(None)
                fallbacks.append(FALLBACK_SPECTRAL)
                refined_counts.append(0)
                continue
            result = refine_rank_r(
                X, r, k, lam, sigma2=sigma2, rng=rng, spectrum=spectrum
            )
            columns[:, k - 1] = result.u_hat
            sel = result.selection
            alpha_hats.append(sel.alpha_hat if sel is not None else None)
            support_sizes.append(sel.size if sel is not None else None)
            fallbacks.append(result.fallback)
            refined_counts.append(result.refined_count)

        self.components_ = columns
        self.eigenvalues_raw_ = raw
        self.lambda_hats_ = tuple(lams)
        self.lambda_clamped_ = tuple(clamped)
        self.sigma2_hat_ = float(sigma2)
        self.alpha_hats_ = alpha_hats
        self.support_sizes_ = support_sizes
        self.fallbacks_ = fallbacks
        self.refined_counts_ = refined_counts
        self.n_features_in_ = n
        return self
