"""Metric-entropy toolkit: quantization, covering, and packing.

The ambient set T(n, r) holds nonnegative row-norm profiles h with
||h||_2 = sqrt(r) and ||h||_inf <= 1. Profiles are quantized onto the lattice
sqrt(z/s) with integer z summing to r*s; enumerating all such z (capped at
z_i <= s+1) yields an exterior cover of T whose elements may stick slightly
outside the set. Packing numbers of low-coherence bases are estimated by
greedy rejection sampling under the exhaustive sign-resolved two-to-infinity
distance.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from .errors import (
    InputError,
    NumericalError,
    PackingInfeasibleError,
    QuantizationError,
)
from .linalg import haar_basis
from .validation import as_float_array, check_positive_int

_SNAP_REL_TOL = 1e-9
_PACKING_PROBE_DRAWS = 10_000
_PACKING_MAX_R = 10
_SAMPLE_MAX_ATTEMPTS = 1000


@dataclass(frozen=True, eq=False)
class RowProfile:
    """A point of T(n, r): h >= 0, ||h||_2 = sqrt(r) within 1e-10, ||h||_inf <= 1."""

    h: np.ndarray
    r: int

    def __post_init__(self):
        h = as_float_array(self.h, "h")
        if h.ndim != 1 or h.size == 0:
            raise InputError(f"h must be a nonempty vector, got shape {h.shape}")
        r = check_positive_int(self.r, "r")
        if np.any(h < 0.0):
            raise InputError("h must be entrywise nonnegative")
        nrm = float(np.linalg.norm(h))
        if abs(nrm - math.sqrt(r)) > 1e-10:
            raise InputError(
                f"||h||_2 must equal sqrt(r) = {math.sqrt(r)!r} within 1e-10, got {nrm!r}"
            )
        if float(np.max(h)) > 1.0 + 1e-12:
            raise InputError("||h||_inf must be at most 1")
        object.__setattr__(self, "h", h)

    @property
    def n(self) -> int:
        return int(self.h.shape[0])


def _profile_array(h, name: str = "h") -> tuple[np.ndarray, int | None]:
    if isinstance(h, RowProfile):
        return h.h, h.r
    return as_float_array(h, name), None


def quantize_profile(h, s: int) -> RowProfile:
    """Quantize a profile onto the lattice sqrt(z/s), preserving sum z = r*s.

    Entry squares are scaled by s and rounded: the first entry floors, each
    later entry floors when the running squared-mass deficit is negative
    (the quantized prefix is ahead) and ceils otherwise. If the integer sum
    misses r*s, it is repaired by a +-1 move at the lowest-index genuinely
    fractional entry whose rounding direction matches, which keeps every
    entry within 1/sqrt(s) of the original.

    Guarantees ||h - v||_inf <= 1/sqrt(s).
    """
    arr, r = _profile_array(h)
    s = check_positive_int(s, "s")
    if r is None:
        r = max(1, round(float(np.dot(arr, arr))))
        arr = RowProfile(h=arr, r=r).h  # full membership validation, norm check included
    n = arr.shape[0]
    target = r * s

    x = arr * arr * s
    snapped = np.rint(x)
    snap_mask = np.abs(x - snapped) <= _SNAP_REL_TOL * np.maximum(1.0, np.abs(x))
    x = np.where(snap_mask, snapped, x)
    fractional = ~snap_mask

    z = np.empty(n, dtype=np.int64)
    floored = np.zeros(n, dtype=bool)
    deficit = 0.0  # sum of h_j^2 - z_j / s over the quantized prefix
    for i in range(n):
        if i == 0 or deficit < 0.0:
            z[i] = int(math.floor(x[i]))
            floored[i] = True
        else:
            z[i] = int(math.ceil(x[i]))
        deficit += float(arr[i] * arr[i]) - z[i] / s

    diff = int(z.sum()) - target
    if diff != 0:
        if abs(diff) > 1:
            raise QuantizationError(
                f"quantizer sum off by {diff}, expected at most 1 (n={n}, r={r}, s={s})"
            )
        moved = False
        for i in range(n):
            if not fractional[i]:
                continue
            if diff < 0 and floored[i] and z[i] + 1 <= s + 1:
                z[i] += 1
                moved = True
                break
            if diff > 0 and not floored[i] and z[i] - 1 >= 0:
                z[i] -= 1
                moved = True
                break
        if not moved:
            raise QuantizationError(
                f"no admissible +-1 correction for sum offset {diff} (n={n}, r={r}, s={s})"
            )

    v = np.sqrt(z / s)
    worst = float(np.max(np.abs(arr - v)))
    bound = 1.0 / math.sqrt(s)
    if worst > bound + 1e-12:
        raise QuantizationError(
            f"quantization error {worst!r} exceeds guarantee {bound!r}"
        )
    return RowProfile(h=v, r=r)


@dataclass(frozen=True, eq=False)
class CoverSet:
    """An enumerated exterior cover of T(n, r) at scale 1/sqrt(s).

    Elements are stored as integer tuples z (the canonical datum) with
    sum z = r*s and 0 <= z_i <= s+1; the float vectors are sqrt(z/s). Cover
    points with some z_i = s+1 lie slightly outside T, which is what makes
    the cover exterior.
    """

    n: int
    r: int
    s: int
    z_tuples: tuple[tuple[int, ...], ...]
    binomial_bound: int

    def __post_init__(self):
        n = check_positive_int(self.n, "n")
        r = check_positive_int(self.r, "r")
        s = check_positive_int(self.s, "s")
        tuples = tuple(tuple(int(v) for v in z) for z in self.z_tuples)
        total = r * s
        for z in tuples:
            if len(z) != n:
                raise InputError(f"cover element {z} must have length n = {n}")
            if any(v < 0 or v > s + 1 for v in z):
                raise InputError(
                    f"cover element {z} has an entry outside [0, s+1] = [0, {s + 1}]"
                )
            if sum(z) != total:
                raise InputError(f"cover element {z} must sum to r*s = {total}")
        object.__setattr__(self, "z_tuples", tuples)

    @property
    def size(self) -> int:
        return len(self.z_tuples)

    def __len__(self) -> int:
        return len(self.z_tuples)

    def __iter__(self):
        return iter(self.z_tuples)

    def __contains__(self, item) -> bool:
        if isinstance(item, RowProfile):
            item = item.h
        if isinstance(item, np.ndarray):
            z = np.rint(np.asarray(item, dtype=np.float64) ** 2 * self.s)
            item = tuple(int(v) for v in z)
        return tuple(item) in self._index()

    def _index(self) -> frozenset:
        # Built lazily; frozen dataclass, so stash via object.__setattr__.
        cached = getattr(self, "_index_cache", None)
        if cached is None:
            cached = frozenset(self.z_tuples)
            object.__setattr__(self, "_index_cache", cached)
        return cached

    def vectors(self) -> np.ndarray:
        return np.sqrt(np.array(self.z_tuples, dtype=np.float64) / self.s)


def _count_compositions(n: int, total: int, cap: int) -> int:
    """Number of z in Z_{>=0}^n with sum z = total and z_i <= cap."""
    ways = [0] * (total + 1)
    ways[0] = 1
    for _ in range(n):
        nxt = [0] * (total + 1)
        for t, w in enumerate(ways):
            if w == 0:
                continue
            for v in range(0, min(cap, total - t) + 1):
                nxt[t + v] += w
        ways = nxt
    return ways[total]


def enumerate_cover_T(n: int, r: int, s: int, cap: int = 10**6) -> CoverSet:
    """Enumerate the lattice cover of T(n, r) at scale 1/sqrt(s).

    Elements are all z with sum z = r*s and z_i <= s+1, in ascending
    lexicographic order. The exact element count is computed first; if it
    exceeds ``cap`` an input error reports the binomial upper bound
    C(n + r*s - 1, r*s) rather than attempting enumeration.
    """
    n = check_positive_int(n, "n")
    r = check_positive_int(r, "r")
    s = check_positive_int(s, "s")
    if r > n:
        raise InputError(f"r must be <= n = {n}, got {r}")
    cap = check_positive_int(cap, "cap")
    total = r * s
    bound = math.comb(n + total - 1, total)
    exact = _count_compositions(n, total, s + 1)
    if exact > cap:
        raise InputError(
            f"cover for (n={n}, r={r}, s={s}) has {exact} elements, above the cap "
            f"{cap}; binomial upper bound C(n + r*s - 1, r*s) = {bound}"
        )

    out: list[tuple[int, ...]] = []
    prefix = [0] * n

    def recurse(i: int, remaining: int):
        if i == n - 1:
            if remaining <= s + 1:
                prefix[i] = remaining
                out.append(tuple(prefix))
            return
        tail_cap = (n - 1 - i) * (s + 1)
        lo = max(0, remaining - tail_cap)
        hi = min(s + 1, remaining)
        for v in range(lo, hi + 1):
            prefix[i] = v
            recurse(i + 1, remaining - v)

    recurse(0, total)
    return CoverSet(n=n, r=r, s=s, z_tuples=tuple(out), binomial_bound=bound)


def sample_profile(n: int, r: int, rng: np.random.Generator) -> RowProfile:
    """Draw a profile from T(n, r) by normalized |gaussian| rejection."""
    n = check_positive_int(n, "n")
    r = check_positive_int(r, "r")
    if r > n:
        raise InputError(f"r must be <= n = {n}, got {r}")
    root_r = math.sqrt(r)
    for _ in range(_SAMPLE_MAX_ATTEMPTS):
        g = np.abs(rng.standard_normal(n))
        nrm = float(np.linalg.norm(g))
        if nrm == 0.0:
            continue
        h = g * (root_r / nrm)
        if float(np.max(h)) <= 1.0:
            return RowProfile(h=h, r=r)
    raise NumericalError(
        f"profile sampling failed after {_SAMPLE_MAX_ATTEMPTS} attempts (n={n}, r={r})"
    )


def verify_cover(cover: CoverSet, draws: int, rng: np.random.Generator) -> float:
    """Check the covering property on random profiles; return the worst deviation.

    Each drawn profile is quantized at the cover's scale; its lattice point
    must be a cover element and lie within 1/sqrt(s) in the sup norm.
    """
    draws = check_positive_int(draws, "draws")
    worst = 0.0
    bound = 1.0 / math.sqrt(cover.s)
    for _ in range(draws):
        prof = sample_profile(cover.n, cover.r, rng)
        v = quantize_profile(prof, cover.s)
        z = tuple(int(round(float(x * x * cover.s))) for x in v.h)
        if z not in cover:
            raise NumericalError(
                f"quantized point {z} missing from the enumerated cover"
            )
        dev = float(np.max(np.abs(prof.h - v.h)))
        if dev > bound + 1e-12:
            raise NumericalError(
                f"covering deviation {dev!r} exceeds 1/sqrt(s) = {bound!r}"
            )
        worst = max(worst, dev)
    return worst


def greedy_packing(
    n: int,
    r: int,
    mu: float,
    delta: float,
    budget: int,
    rng: np.random.Generator,
) -> int:
    """Greedy delta-packing count of the coherence-mu basis set.

    Haar bases are rejection-sampled into the set of n x r orthonormal bases
    with max row norm at most sqrt(mu r / n); a member joins the packing when
    its exhaustive sign-resolved two-to-infinity distance to every accepted
    basis exceeds delta. If the first 10^4 draws produce no member at all,
    membership is declared infeasible.

    Returns the number of accepted bases after ``budget`` draws.
    """
    n = check_positive_int(n, "n")
    r = check_positive_int(r, "r")
    if r > n:
        raise InputError(f"r must be <= n = {n}, got {r}")
    if r > _PACKING_MAX_R:
        raise InputError(
            f"exhaustive sign resolution limits packing to r <= {_PACKING_MAX_R}, got {r}"
        )
    mu = float(mu)
    if not (1.0 <= mu <= n / r):
        raise InputError(f"mu must lie in [1, n/r] = [1, {n / r!r}], got {mu!r}")
    delta = float(delta)
    if not (math.isfinite(delta) and delta > 0.0):
        raise InputError(f"delta must be positive, got {delta!r}")
    budget = check_positive_int(budget, "budget")

    row_cap = math.sqrt(mu * r / n)
    signs = np.array(list(itertools.product((1.0, -1.0), repeat=r)))
    # Accepted bases live in a geometrically grown buffer so each candidate
    # is checked against the whole packing in a few vectorized passes (one
    # per sign pattern) instead of a quadratic number of pairwise calls.
    buf = np.empty((64, n, r))
    count = 0
    members_seen = 0
    for attempt in range(1, budget + 1):
        U = haar_basis(n, r, rng)
        if float(np.max(np.linalg.norm(U, axis=1))) <= row_cap:
            members_seen += 1
            if count == 0:
                separated = True
            else:
                stack = buf[:count]
                dist = np.full(count, np.inf)
                for s in signs:
                    diff = stack - U * s
                    row_norms = np.sqrt(np.einsum("mjk,mjk->mj", diff, diff))
                    np.minimum(dist, row_norms.max(axis=1), out=dist)
                separated = bool(np.all(dist > delta))
            if separated:
                if count == buf.shape[0]:
                    buf = np.concatenate([buf, np.empty_like(buf)], axis=0)
                buf[count] = U
                count += 1
        if attempt == _PACKING_PROBE_DRAWS and members_seen == 0:
            raise PackingInfeasibleError(
                f"no draw among the first {_PACKING_PROBE_DRAWS} landed in the "
                f"coherence-{mu} set (n={n}, r={r}); acceptance rate below 1e-4"
            )
    return count
