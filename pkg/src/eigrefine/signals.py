"""Synthetic spiked-matrix instances: planted bases, noise, and assembly.

A ground-truth instance is a symmetric rank-r signal U diag(lambda) U^T whose
columns each concentrate a prescribed fraction of their mass on one "spike"
coordinate, plus an i.i.d. symmetric noise matrix. The spike weight ``a``
directly controls the coherence of the planted basis, which is the quantity
the estimators in this package are designed to be insensitive to.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import InputError, NumericalError
from .validation import (
    as_symmetric_matrix,
    check_orthonormal_columns,
    check_positive_int,
)

SCHEMES = ("haar", "bernoulli")
NOISE_KINDS = ("gaussian", "laplacian", "rademacher")

_MAX_DRAW_ATTEMPTS = 100


@dataclass(frozen=True)
class SignalSpec:
    """Parameters of a planted rank-r signal.

    ``eigenvalues`` must be nonzero and sorted by decreasing absolute value;
    ``a`` is the exact value of each column's spike coordinate before
    orthogonalization, with the remaining mass sqrt(1 - a^2) spread over the
    other coordinates according to ``scheme``.
    """

    n: int
    r: int
    a: float
    scheme: str
    eigenvalues: tuple[float, ...]

    def __post_init__(self):
        check_positive_int(self.n, "n", minimum=2)
        check_positive_int(self.r, "r")
        if self.r > self.n:
            raise InputError(f"r must be <= n = {self.n}, got {self.r}")
        if not (0.0 < self.a < 1.0):
            raise InputError(f"a must lie in (0, 1), got {self.a!r}")
        if self.scheme not in SCHEMES:
            raise InputError(f"scheme must be one of {SCHEMES}, got {self.scheme!r}")
        lams = tuple(float(v) for v in self.eigenvalues)
        if len(lams) != self.r:
            raise InputError(
                f"eigenvalues must have length r = {self.r}, got {len(lams)}"
            )
        if any(not math.isfinite(v) or v == 0.0 for v in lams):
            raise InputError("eigenvalues must be finite and nonzero")
        mags = [abs(v) for v in lams]
        if any(mags[i] < mags[i + 1] for i in range(len(mags) - 1)):
            raise InputError("eigenvalues must be sorted by decreasing magnitude")
        object.__setattr__(self, "eigenvalues", lams)


@dataclass(frozen=True, eq=False)
class GroundTruth:
    """A realized planted basis with its eigenvalues and diagnostics."""

    U_star: np.ndarray
    eigenvalues: tuple[float, ...]
    spike_indices: tuple[int, ...]
    mu: float
    kappa: float

    @property
    def n(self) -> int:
        return self.U_star.shape[0]

    @property
    def r(self) -> int:
        return self.U_star.shape[1]


@dataclass(frozen=True)
class NoiseSpec:
    """Entrywise noise law: distribution, variance, and subgaussian proxy.

    ``nu_w`` defaults to the distribution's natural subgaussian variance
    proxy: sigma2 for gaussian and rademacher, 2*sigma2 for laplacian.
    """

    dist: str
    sigma2: float = 1.0
    nu_w: float | None = field(default=None)

    def __post_init__(self):
        if self.dist not in NOISE_KINDS:
            raise InputError(f"dist must be one of {NOISE_KINDS}, got {self.dist!r}")
        if not (math.isfinite(self.sigma2) and self.sigma2 > 0):
            raise InputError(f"sigma2 must be a positive float, got {self.sigma2!r}")
        if self.nu_w is None:
            default = 2.0 * self.sigma2 if self.dist == "laplacian" else self.sigma2
            object.__setattr__(self, "nu_w", default)
        elif not (math.isfinite(self.nu_w) and self.nu_w > 0):
            raise InputError(f"nu_w must be a positive float, got {self.nu_w!r}")

    @property
    def sigma(self) -> float:
        return math.sqrt(self.sigma2)


def gen_spike_vector(
    n: int, a: float, scheme: str, spike_index: int, rng: np.random.Generator
) -> np.ndarray:
    """Draw a unit vector with value exactly ``a`` at ``spike_index``.

    The other n-1 coordinates carry total squared mass 1 - a^2: uniformly
    distributed on the sphere for ``haar``, equal-magnitude random signs for
    ``bernoulli``. A draw is rejected if any off-spike coordinate exceeds
    ``a`` in absolute value, so the spike remains the dominant coordinate;
    persistent rejection (100 attempts) is an error, which happens when n is
    too small for the requested ``a`` under the bernoulli scheme.
    """
    n = check_positive_int(n, "n", minimum=2)
    if not (0.0 < a < 1.0):
        raise InputError(f"a must lie in (0, 1), got {a!r}")
    if scheme not in SCHEMES:
        raise InputError(f"scheme must be one of {SCHEMES}, got {scheme!r}")
    spike_index = int(spike_index)
    if not (0 <= spike_index < n):
        raise InputError(f"spike_index must lie in [0, {n}), got {spike_index}")

    tail_norm = math.sqrt(1.0 - a * a)
    for _ in range(_MAX_DRAW_ATTEMPTS):
        if scheme == "haar":
            g = rng.standard_normal(n - 1)
            nrm = float(np.linalg.norm(g))
            if nrm == 0.0:
                continue
            tail = g * (tail_norm / nrm)
        else:
            signs = rng.integers(0, 2, size=n - 1) * 2 - 1
            tail = signs * (tail_norm / math.sqrt(n - 1))
        if float(np.max(np.abs(tail))) > a:
            continue
        v = np.empty(n, dtype=np.float64)
        v[:spike_index] = tail[:spike_index]
        v[spike_index] = a
        v[spike_index + 1 :] = tail[spike_index:]
        return v
    raise NumericalError(
        f"spike vector rejection sampling failed after {_MAX_DRAW_ATTEMPTS} attempts "
        f"(n={n}, a={a}, scheme={scheme}): off-spike coordinates always exceed a"
    )


def gen_rank_r_basis(spec: SignalSpec, rng: np.random.Generator) -> GroundTruth:
    """Draw an orthonormal planted basis with one spike per column.

    Spike coordinates are distinct, chosen uniformly without replacement.
    Column 1 is a raw spike vector; each later column is a fresh spike vector
    with the span of the previous columns projected out, then normalized.
    A projection that annihilates the draw (norm < 1e-8) triggers a redraw.
    """
    rng_choice = rng.choice(spec.n, size=spec.r, replace=False)
    spike_indices = tuple(int(i) for i in rng_choice)
    U = np.zeros((spec.n, spec.r), dtype=np.float64)
    for k in range(spec.r):
        for _ in range(_MAX_DRAW_ATTEMPTS):
            v = gen_spike_vector(spec.n, spec.a, spec.scheme, spike_indices[k], rng)
            if k == 0:
                U[:, 0] = v
                break
            prev = U[:, :k]
            w = v - prev @ (prev.T @ v)
            nrm = float(np.linalg.norm(w))
            if nrm < 1e-8:
                continue
            U[:, k] = w / nrm
            break
        else:
            raise NumericalError(
                f"basis column {k + 1} degenerate after {_MAX_DRAW_ATTEMPTS} redraws"
            )
    mu = coherence(U)
    mags = [abs(v) for v in spec.eigenvalues]
    kappa = mags[0] / mags[-1]
    return GroundTruth(
        U_star=U,
        eigenvalues=spec.eigenvalues,
        spike_indices=spike_indices,
        mu=mu,
        kappa=kappa,
    )


def gen_noise(n: int, noise: NoiseSpec, rng: np.random.Generator) -> np.ndarray:
    """Draw a symmetric noise matrix with i.i.d. entries on and above the diagonal.

    Each law is scaled to entrywise variance ``noise.sigma2``; the diagonal
    follows the same law as the off-diagonal.
    """
    n = check_positive_int(n, "n", minimum=1)
    m = n * (n + 1) // 2
    sigma = noise.sigma
    if noise.dist == "gaussian":
        draws = rng.standard_normal(m) * sigma
    elif noise.dist == "laplacian":
        # Laplace(b) has variance 2 b^2, so b = sigma / sqrt(2).
        draws = rng.laplace(0.0, sigma / math.sqrt(2.0), m)
    else:
        draws = (rng.integers(0, 2, size=m) * 2 - 1) * sigma
    iu = np.triu_indices(n)
    W = np.zeros((n, n), dtype=np.float64)
    W[iu] = draws
    W[iu[1], iu[0]] = draws
    return W


def assemble_observation(gt: GroundTruth, W) -> np.ndarray:
    """Form the observation Y = U diag(lambda) U^T + W, exactly symmetric."""
    W = as_symmetric_matrix(W, "W")
    if W.shape[0] != gt.n:
        raise InputError(f"W must be {gt.n} x {gt.n}, got {W.shape}")
    lam = np.array(gt.eigenvalues, dtype=np.float64)
    Y = (gt.U_star * lam) @ gt.U_star.T + W
    return (Y + Y.T) / 2.0


def coherence(U) -> float:
    """Coherence (n/r) * max_i ||U_{i,.}||_2^2 of an orthonormal basis.

    Ranges over [1, n/r]: 1 for perfectly delocalized bases, n/r when one
    row carries an entire unit of mass.
    """
    U = check_orthonormal_columns(U, tol=1e-8, name="U")
    n, r = U.shape
    row_mass = np.sum(U * U, axis=1)
    return float(n / r * np.max(row_mass))


def lambda_star_default(n: int) -> float:
    """Signal strength sqrt(n log n) used throughout the simulations."""
    n = check_positive_int(n, "n", minimum=2)
    return math.sqrt(n * math.log(n))


def eigenvalue_ladder(n: int, r: int) -> tuple[float, ...]:
    """Descending eigenvalues 0.5 (r - k + 2) sqrt(n log n), k = 1..r.

    Consecutive gaps all equal 0.5 sqrt(n log n) and the smallest rung is
    exactly sqrt(n log n).
    """
    n = check_positive_int(n, "n", minimum=2)
    r = check_positive_int(r, "r")
    base = lambda_star_default(n)
    return tuple(0.5 * (r - k + 2) * base for k in range(1, r + 1))
