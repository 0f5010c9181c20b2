"""Threshold-ladder selection of the large-entry support of a unit vector.

The ladder places thresholds at (log n)^(-l/2); an admissible threshold must
capture enough coordinates relative to its own scale. The selected support
drives the sign conjugation and the averaged refinement step downstream.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import InputError, SupportSelectionError
from .validation import check_positive_int, check_unit_vector, check_vector

ALPHA_MODES = ("grid", "median")

_MIN_N = 8


@dataclass(frozen=True)
class AlphaGrid:
    """Descending threshold ladder for a given dimension.

    ``depth`` is log(2n)/log(log n); the ladder holds (log n)^(-l/2) for
    l = 1..ceil(depth)-1 and terminates at (log n)^(-depth/2), which equals
    1/sqrt(2n) exactly.
    """

    n: int
    depth: float
    values: tuple[float, ...]


@dataclass(frozen=True, eq=False)
class SupportSelection:
    """A chosen threshold with the coordinates and signs it selects.

    ``q`` is +-1 with the sign of ``u`` on the support and +1 elsewhere.
    ``relaxed_gap`` marks a grid-mode selection that only succeeded after
    dropping the gap condition.
    """

    alpha_hat: float
    support: np.ndarray
    q: np.ndarray
    mode: str
    relaxed_gap: bool

    @property
    def size(self) -> int:
        return int(self.support.shape[0])


def alpha_grid(n: int) -> AlphaGrid:
    """Build the threshold ladder for dimension ``n`` (requires n >= 8)."""
    n = check_positive_int(n, "n")
    if n < _MIN_N:
        raise InputError(f"alpha_grid requires n >= {_MIN_N}, got {n}")
    log_n = math.log(n)
    depth = math.log(2 * n) / math.log(log_n)
    top = math.ceil(depth)
    values = [log_n ** (-level / 2.0) for level in range(1, top)]
    values.append(math.exp(-0.5 * depth * math.log(log_n)))
    for prev, cur in zip(values, values[1:]):
        if not cur < prev:
            raise InputError(f"alpha ladder not strictly descending at n={n}")
    return AlphaGrid(n=n, depth=depth, values=tuple(values))


def find_alpha(v) -> float:
    """Largest threshold alpha in the ladder with 1/alpha^2 >= count > 1/(alpha^2 log^2 n).

    ``count`` is the number of coordinates with |v_i| >= alpha. Raises
    SupportSelectionError when no ladder value is admissible.
    """
    v = check_unit_vector(v, tol=1e-8)
    n = v.shape[0]
    grid = alpha_grid(n)
    abs_v = np.abs(v)
    log_n = math.log(n)
    for alpha in grid.values:
        count = int(np.count_nonzero(abs_v >= alpha))
        upper = 1.0 / (alpha * alpha)
        lower = upper / (log_n * log_n)
        if lower < count <= upper:
            return alpha
    raise SupportSelectionError(
        f"no ladder threshold admissible for n={n}: every level's captured count "
        "fell outside its admissible band"
    )


def select_support(
    u,
    grid: AlphaGrid | None = None,
    beta: float = 0.0,
    mode: str = "grid",
) -> SupportSelection:
    """Select the large-entry support of ``u`` and its sign pattern.

    Grid mode scans the ladder from the largest threshold down and takes the
    first alpha whose captured count is at least 1/(alpha^2 log^2 n) and, for
    beta > 0, whose margin band ((1-beta) alpha, (1+beta) alpha) contains no
    coordinate. If every cardinality-admissible alpha fails the margin test,
    the scan is retried without it and the result is flagged ``relaxed_gap``.

    Median mode takes alpha as the lower median of |u| and skips both tests.
    """
    u = check_vector(u, name="u")
    n = u.shape[0]
    if mode not in ALPHA_MODES:
        raise InputError(f"mode must be one of {ALPHA_MODES}, got {mode!r}")
    if not (0.0 <= beta < 1.0):
        raise InputError(f"beta must lie in [0, 1), got {beta!r}")
    abs_u = np.abs(u)

    if mode == "median":
        order = np.sort(abs_u)
        alpha_hat = float(order[(n - 1) // 2])  # lower median for even n
        relaxed = False
    else:
        if grid is None:
            grid = alpha_grid(n)
        elif grid.n != n:
            raise InputError(f"grid was built for n={grid.n}, but u has length {n}")
        log_n = math.log(n)
        alpha_hat = None
        fallback = None
        for alpha in grid.values:
            count = int(np.count_nonzero(abs_u >= alpha))
            if count < 1.0 / (alpha * alpha * log_n * log_n):
                continue
            if beta > 0.0:
                lo, hi = (1.0 - beta) * alpha, (1.0 + beta) * alpha
                gap_occupied = bool(np.any((abs_u > lo) & (abs_u < hi)))
                if gap_occupied:
                    if fallback is None:
                        fallback = alpha
                    continue
            alpha_hat = alpha
            relaxed = False
            break
        else:
            if fallback is None:
                raise SupportSelectionError(
                    f"no ladder threshold captured enough coordinates for n={n}"
                )
            alpha_hat = fallback
            relaxed = True

    mask = abs_u >= alpha_hat
    support = np.flatnonzero(mask)
    q = np.ones(n, dtype=np.float64)
    q[mask] = np.where(u[mask] >= 0.0, 1.0, -1.0)
    return SupportSelection(
        alpha_hat=float(alpha_hat),
        support=support,
        q=q,
        mode=mode,
        relaxed_gap=relaxed,
    )
