"""Monte Carlo harness: configuration, trial runners, records, and summaries.

Every trial derives its own RNG from a content-addressed seed (base seed,
cell parameters, trial index hashed together), so the output is a pure
function of the configuration: adding grid cells, reordering them, or
running with more worker threads never changes any other cell's records.
"""

from __future__ import annotations

import concurrent.futures
import hashlib
import math
import sys
import time
from dataclasses import dataclass, fields
from typing import Iterable

import numpy as np

from .errors import InputError, NumericalError
from .estimators import EIG_ESTIMATORS, RefinedRankOne, RefinedRankR, SpectralEigenvectors
from .metrics import d_2inf_signed, d_inf
from .signals import (
    NOISE_KINDS,
    SCHEMES,
    NoiseSpec,
    SignalSpec,
    assemble_observation,
    eigenvalue_ladder,
    gen_noise,
    gen_rank_r_basis,
    lambda_star_default,
)
from .support import ALPHA_MODES
from .validation import check_positive_int

LAMBDA_RULES = ("sqrt_nlogn", "ladder", "explicit")
SIGMA_MODES = ("plugin", "known")
METHODS = ("spectral", "refined")

CSV_FIELDS = (
    "seed", "n", "r", "k", "a", "noise", "scheme", "method",
    "d_inf", "d_2inf", "lambda_true", "lambda_hat", "sigma2_hat",
    "alpha_hat", "support_size", "fallback", "wall_ms",
)
CSV_HEADER = ",".join(CSV_FIELDS)

_INT_FIELDS = {"seed", "n", "r", "k", "support_size"}
_STR_FIELDS = {"noise", "scheme", "method", "fallback"}
_REQUIRED_FIELDS = {"seed", "n", "r", "k", "a", "noise", "scheme", "method"}


@dataclass(frozen=True)
class ExperimentConfig:
    """Full description of a simulation run.

    ``sigma2`` is the true noise variance used by the generator; under
    ``sigma_mode = "known"`` the estimators receive it as well, under
    ``"plugin"`` they use their own residual-based estimate.
    """

    n_grid: tuple[int, ...] = (256, 512, 1024, 2048)
    a_values: tuple[float, ...] = (0.3, 0.55, 0.8)
    noise: tuple[str, ...] = ("gaussian",)
    scheme: tuple[str, ...] = ("haar",)
    r: int = 1
    trials: int = 20
    base_seed: int = 0
    alpha_mode: str = "median"
    beta: float = 0.0
    eig_estimator: str = "debiased"
    sigma_mode: str = "plugin"
    sigma2: float = 1.0
    lambda_rule: str = "sqrt_nlogn"
    lambda_values: tuple[float, ...] | None = None

    def __post_init__(self):
        object.__setattr__(self, "n_grid", tuple(int(n) for n in self.n_grid))
        object.__setattr__(self, "a_values", tuple(float(a) for a in self.a_values))
        object.__setattr__(self, "noise", tuple(self.noise))
        object.__setattr__(self, "scheme", tuple(self.scheme))
        if not self.n_grid:
            raise InputError("n_grid must be nonempty")
        for n in self.n_grid:
            if n < 8:
                raise InputError(f"every n must be >= 8, got {n}")
        if not self.a_values or any(not (0.0 < a < 1.0) for a in self.a_values):
            raise InputError("a_values must be nonempty with every a in (0, 1)")
        if not self.noise or any(k not in NOISE_KINDS for k in self.noise):
            raise InputError(f"noise kinds must come from {NOISE_KINDS}, got {self.noise!r}")
        if not self.scheme or any(s not in SCHEMES for s in self.scheme):
            raise InputError(f"schemes must come from {SCHEMES}, got {self.scheme!r}")
        check_positive_int(self.r, "r")
        check_positive_int(self.trials, "trials", minimum=0)
        if int(self.base_seed) < 0:
            raise InputError(f"base_seed must be nonnegative, got {self.base_seed!r}")
        object.__setattr__(self, "base_seed", int(self.base_seed))
        if self.alpha_mode not in ALPHA_MODES:
            raise InputError(f"alpha_mode must be one of {ALPHA_MODES}, got {self.alpha_mode!r}")
        if not (0.0 <= self.beta < 1.0):
            raise InputError(f"beta must lie in [0, 1), got {self.beta!r}")
        if self.eig_estimator not in EIG_ESTIMATORS:
            raise InputError(
                f"eig_estimator must be one of {EIG_ESTIMATORS}, got {self.eig_estimator!r}"
            )
        if self.sigma_mode not in SIGMA_MODES:
            raise InputError(f"sigma_mode must be one of {SIGMA_MODES}, got {self.sigma_mode!r}")
        if not (math.isfinite(self.sigma2) and self.sigma2 > 0.0):
            raise InputError(f"sigma2 must be positive, got {self.sigma2!r}")
        if self.lambda_rule not in LAMBDA_RULES:
            raise InputError(f"lambda_rule must be one of {LAMBDA_RULES}, got {self.lambda_rule!r}")
        if self.lambda_rule == "explicit":
            if self.lambda_values is None:
                raise InputError("lambda_rule 'explicit' requires lambda_values")
            vals = tuple(float(v) for v in self.lambda_values)
            if len(vals) != self.r:
                raise InputError(
                    f"lambda_values must have length r = {self.r}, got {len(vals)}"
                )
            object.__setattr__(self, "lambda_values", vals)
        elif self.lambda_values is not None:
            raise InputError("lambda_values is only allowed with lambda_rule 'explicit'")

    def cells(self) -> list[tuple[int, float, str, str]]:
        return [
            (n, a, noise, scheme)
            for n in self.n_grid
            for a in self.a_values
            for noise in self.noise
            for scheme in self.scheme
        ]

    def lambda_stars(self, n: int) -> tuple[float, ...]:
        if self.lambda_rule == "explicit":
            return self.lambda_values
        if self.lambda_rule == "ladder":
            return eigenvalue_ladder(n, self.r)
        return tuple(lambda_star_default(n) for _ in range(self.r))


@dataclass(frozen=True)
class TrialRecord:
    """One method's result on one trial (or one column of it).

    ``k`` is the 1-based column index for per-column rank-r rows and 0 for
    aggregate rows; rank-1 trials emit k = 0 rows whose d_2inf duplicates
    d_inf. Optional fields are None when the quantity does not apply.
    """

    seed: int
    n: int
    r: int
    k: int
    a: float
    noise: str
    scheme: str
    method: str
    d_inf: float | None
    d_2inf: float | None
    lambda_true: float | None
    lambda_hat: float | None
    sigma2_hat: float | None
    alpha_hat: float | None
    support_size: int | None
    fallback: str | None
    wall_ms: float | None


def trial_seed(
    base_seed: int, n: int, a: float, noise: str, scheme: str, r: int, trial: int
) -> int:
    """Content-addressed 64-bit trial seed.

    First 8 bytes (big-endian) of sha256 over the base seed and the cell's
    parameters; stable under any reordering or extension of the grid.
    """
    tag = f"{base_seed}|n={n}|a={a!r}|noise={noise}|scheme={scheme}|r={r}|trial={trial}"
    digest = hashlib.sha256(tag.encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "big")


def _elapsed_ms(t0: float, timings: bool) -> float | None:
    if not timings:
        return None
    return (time.perf_counter() - t0) * 1000.0


def _run_trial_rank1(
    config: ExperimentConfig, n: int, a: float, noise: str, scheme: str, trial: int,
    timings: bool,
) -> list[TrialRecord]:
    seed = trial_seed(config.base_seed, n, a, noise, scheme, config.r, trial)
    rng = np.random.default_rng(seed)
    lam_star = config.lambda_stars(n)[0]
    spec = SignalSpec(n=n, r=1, a=a, scheme=scheme, eigenvalues=(lam_star,))
    truth = gen_rank_r_basis(spec, rng)
    W = gen_noise(n, NoiseSpec(noise, config.sigma2), rng)
    Y = assemble_observation(truth, W)
    u_star = truth.U_star[:, 0]
    common = dict(seed=seed, n=n, r=1, k=0, a=a, noise=noise, scheme=scheme)

    t0 = time.perf_counter()
    spectral = SpectralEigenvectors(r=1).fit(Y)
    u_spec = spectral.components_[:, 0]
    d_spec = d_inf(u_spec, u_star)
    rec_spec = TrialRecord(
        method="spectral", d_inf=d_spec, d_2inf=d_spec,
        lambda_true=lam_star, lambda_hat=float(spectral.eigenvalues_[0]),
        sigma2_hat=None, alpha_hat=None, support_size=None, fallback=None,
        wall_ms=_elapsed_ms(t0, timings), **common,
    )

    t1 = time.perf_counter()
    sigma2 = "auto" if config.sigma_mode == "plugin" else config.sigma2
    try:
        refined = RefinedRankOne(
            beta=config.beta,
            alpha_mode=config.alpha_mode,
            sigma2=sigma2,
            eig_estimator=config.eig_estimator,
            conjugate=True,
            random_state=rng,
        ).fit(Y)
        d_ref = d_inf(refined.u_hat_, u_star)
        rec_ref = TrialRecord(
            method="refined", d_inf=d_ref, d_2inf=d_ref,
            lambda_true=lam_star, lambda_hat=refined.lambda_hat_,
            sigma2_hat=refined.sigma2_hat_, alpha_hat=refined.alpha_hat_,
            support_size=refined.support_size_, fallback=refined.fallback_,
            wall_ms=_elapsed_ms(t1, timings), **common,
        )
    except NumericalError:
        # Refinement must never abort a sweep: fall back to the spectral
        # estimate and mark the record.
        rec_ref = TrialRecord(
            method="refined", d_inf=d_spec, d_2inf=d_spec,
            lambda_true=lam_star, lambda_hat=None, sigma2_hat=None,
            alpha_hat=None, support_size=None, fallback="spectral_fallback",
            wall_ms=_elapsed_ms(t1, timings), **common,
        )
    return [rec_spec, rec_ref]


def _run_trial_rankr(
    config: ExperimentConfig, n: int, a: float, noise: str, scheme: str, trial: int,
    timings: bool,
) -> list[TrialRecord]:
    seed = trial_seed(config.base_seed, n, a, noise, scheme, config.r, trial)
    rng = np.random.default_rng(seed)
    r = config.r
    lam_stars = config.lambda_stars(n)
    spec = SignalSpec(n=n, r=r, a=a, scheme=scheme, eigenvalues=lam_stars)
    truth = gen_rank_r_basis(spec, rng)
    W = gen_noise(n, NoiseSpec(noise, config.sigma2), rng)
    Y = assemble_observation(truth, W)
    common = dict(seed=seed, n=n, r=r, a=a, noise=noise, scheme=scheme)
    records: list[TrialRecord] = []

    t0 = time.perf_counter()
    spectral = SpectralEigenvectors(r=r).fit(Y)
    U_spec = spectral.components_
    ms_spec = _elapsed_ms(t0, timings)
    for k in range(1, r + 1):
        records.append(TrialRecord(
            method="spectral", k=k,
            d_inf=d_inf(U_spec[:, k - 1], truth.U_star[:, k - 1]), d_2inf=None,
            lambda_true=lam_stars[k - 1],
            lambda_hat=float(spectral.eigenvalues_[k - 1]),
            sigma2_hat=None, alpha_hat=None, support_size=None, fallback=None,
            wall_ms=ms_spec, **common,
        ))
    records.append(TrialRecord(
        method="spectral", k=0, d_inf=None,
        d_2inf=d_2inf_signed(U_spec, truth.U_star),
        lambda_true=None, lambda_hat=None, sigma2_hat=None, alpha_hat=None,
        support_size=None, fallback=None, wall_ms=ms_spec, **common,
    ))

    t1 = time.perf_counter()
    sigma2 = "auto" if config.sigma_mode == "plugin" else config.sigma2
    try:
        refined = RefinedRankR(
            r=r, sigma2=sigma2, eig_estimator=config.eig_estimator,
            random_state=rng,
        ).fit(Y)
        U_ref = refined.components_
        ms_ref = _elapsed_ms(t1, timings)
        for k in range(1, r + 1):
            records.append(TrialRecord(
                method="refined", k=k,
                d_inf=d_inf(U_ref[:, k - 1], truth.U_star[:, k - 1]), d_2inf=None,
                lambda_true=lam_stars[k - 1],
                lambda_hat=float(refined.lambda_hats_[k - 1]),
                sigma2_hat=refined.sigma2_hat_,
                alpha_hat=refined.alpha_hats_[k - 1],
                support_size=refined.support_sizes_[k - 1],
                fallback=refined.fallbacks_[k - 1],
                wall_ms=ms_ref, **common,
            ))
        records.append(TrialRecord(
            method="refined", k=0, d_inf=None,
            d_2inf=d_2inf_signed(U_ref, truth.U_star),
            lambda_true=None, lambda_hat=None, sigma2_hat=refined.sigma2_hat_,
            alpha_hat=None, support_size=None, fallback=None,
            wall_ms=ms_ref, **common,
        ))
    except NumericalError:
        ms_ref = _elapsed_ms(t1, timings)
        for k in range(1, r + 1):
            records.append(TrialRecord(
                method="refined", k=k,
                d_inf=d_inf(U_spec[:, k - 1], truth.U_star[:, k - 1]), d_2inf=None,
                lambda_true=lam_stars[k - 1], lambda_hat=None, sigma2_hat=None,
                alpha_hat=None, support_size=None, fallback="spectral_fallback",
                wall_ms=ms_ref, **common,
            ))
        records.append(TrialRecord(
            method="refined", k=0, d_inf=None,
            d_2inf=d_2inf_signed(U_spec, truth.U_star),
            lambda_true=None, lambda_hat=None, sigma2_hat=None, alpha_hat=None,
            support_size=None, fallback="spectral_fallback", wall_ms=ms_ref,
            **common,
        ))
    return records


def _run_tasks(worker, tasks, jobs: int) -> list[TrialRecord]:
    if jobs <= 1:
        chunks = [worker(*t) for t in tasks]
    else:
        with concurrent.futures.ThreadPoolExecutor(max_workers=jobs) as pool:
            chunks = list(pool.map(lambda t: worker(*t), tasks))
    return [rec for chunk in chunks for rec in chunk]


def run_rank1(config: ExperimentConfig, jobs: int = 1, timings: bool = False) -> list[TrialRecord]:
    """Run the rank-1 sweep: spectral and refined estimates on shared draws.

    Emits two records per trial (method 'spectral' and 'refined', both k = 0)
    in deterministic grid-then-trial order, independent of ``jobs``.
    """
    if config.r != 1:
        raise InputError(f"run_rank1 requires r = 1, got r = {config.r}")
    jobs = check_positive_int(jobs, "jobs")
    tasks = [
        (config, n, a, noise, scheme, t, timings)
        for (n, a, noise, scheme) in config.cells()
        for t in range(config.trials)
    ]
    return _run_tasks(_run_trial_rank1, tasks, jobs)


def run_rankr(config: ExperimentConfig, jobs: int = 1, timings: bool = False) -> list[TrialRecord]:
    """Run the rank-r sweep: per-column records (k = 1..r) plus k = 0
    aggregate rows carrying the basis-level two-to-infinity error."""
    if config.lambda_rule == "ladder" and config.r < 2:
        raise InputError("lambda_rule 'ladder' requires r >= 2")
    if config.eig_estimator == "support_sum":
        raise InputError("eig_estimator 'support_sum' is rank-1 only")
    jobs = check_positive_int(jobs, "jobs")
    tasks = [
        (config, n, a, noise, scheme, t, timings)
        for (n, a, noise, scheme) in config.cells()
        for t in range(config.trials)
    ]
    return _run_tasks(_run_trial_rankr, tasks, jobs)


def bootstrap_ci(
    samples, level: float = 0.95, b: int = 1000, rng: np.random.Generator | None = None
) -> tuple[float, float]:
    """Percentile bootstrap interval for the mean.

    Resamples the data ``b`` times with replacement and returns the
    (1-level)/2 and (1+level)/2 linear-interpolation quantiles of the
    resampled means.
    """
    arr = np.asarray(samples, dtype=np.float64)
    if arr.ndim != 1 or arr.size == 0:
        raise InputError("samples must be a nonempty 1-d sequence")
    if not np.all(np.isfinite(arr)):
        raise InputError("samples contain non-finite values")
    if not (0.0 < level < 1.0):
        raise InputError(f"level must lie in (0, 1), got {level!r}")
    b = check_positive_int(b, "b")
    if rng is None:
        rng = np.random.default_rng()
    idx = rng.integers(0, arr.size, size=(b, arr.size))
    means = arr[idx].mean(axis=1)
    lo, hi = np.quantile(means, [(1.0 - level) / 2.0, (1.0 + level) / 2.0])
    return float(lo), float(hi)


@dataclass(frozen=True)
class SummaryRow:
    n: int
    a: float
    noise: str
    scheme: str
    method: str
    k: int
    metric: str
    count: int
    mean: float
    ci_low: float
    ci_high: float


def summarize(
    records: Iterable[TrialRecord],
    metric: str = "d_inf",
    level: float = 0.95,
    b: int = 1000,
    seed: int = 0,
) -> list[SummaryRow]:
    """Group records by cell/method/k and attach bootstrap intervals.

    Groups appear in first-occurrence order; records whose ``metric`` field
    is None are skipped, and groups left empty are dropped. Each group's
    bootstrap RNG is derived from the group key, so summaries do not depend
    on how many other groups exist.
    """
    if metric not in {"d_inf", "d_2inf"}:
        raise InputError(f"metric must be 'd_inf' or 'd_2inf', got {metric!r}")
    groups: dict[tuple, list[float]] = {}
    for rec in records:
        value = getattr(rec, metric)
        if value is None:
            continue
        key = (rec.n, rec.a, rec.noise, rec.scheme, rec.method, rec.k)
        groups.setdefault(key, []).append(float(value))
    rows = []
    for key, values in groups.items():
        n, a, noise, scheme, method, k = key
        tag = f"{seed}|{metric}|n={n}|a={a!r}|noise={noise}|scheme={scheme}|method={method}|k={k}"
        digest = hashlib.sha256(tag.encode("utf-8")).digest()
        rng = np.random.default_rng(int.from_bytes(digest[:8], "big"))
        lo, hi = bootstrap_ci(values, level=level, b=b, rng=rng)
        rows.append(SummaryRow(
            n=n, a=a, noise=noise, scheme=scheme, method=method, k=k,
            metric=metric, count=len(values),
            mean=float(np.mean(values)), ci_low=lo, ci_high=hi,
        ))
    return rows


def _format_cell(value) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        raise InputError("boolean record fields are not part of the CSV schema")
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        f = float(value)
        if not math.isfinite(f):
            raise InputError(f"non-finite value {value!r} cannot be serialized")
        return repr(f)
    text = str(value)
    if any(c in text for c in ",\n\r\""):
        raise InputError(f"record field {text!r} contains CSV delimiter characters")
    return text


def emit_csv(records: Iterable[TrialRecord]) -> str:
    """Serialize records to CSV: exact header, LF endings, shortest
    round-trip float notation, empty cell for missing values."""
    lines = [CSV_HEADER]
    for rec in records:
        lines.append(",".join(_format_cell(getattr(rec, f)) for f in CSV_FIELDS))
    return "\n".join(lines) + "\n"


def parse_csv(text: str) -> list[TrialRecord]:
    """Inverse of :func:`emit_csv`; the header must match exactly."""
    lines = text.split("\n")
    if lines and lines[-1] == "":
        lines.pop()
    if not lines or lines[0] != CSV_HEADER:
        raise InputError(
            f"CSV header mismatch: expected {CSV_HEADER!r}, got {(lines[0] if lines else '')!r}"
        )
    records = []
    for ln, line in enumerate(lines[1:], start=2):
        parts = line.split(",")
        if len(parts) != len(CSV_FIELDS):
            raise InputError(
                f"line {ln}: expected {len(CSV_FIELDS)} fields, got {len(parts)}"
            )
        kwargs = {}
        for name, raw in zip(CSV_FIELDS, parts):
            if raw == "":
                if name in _REQUIRED_FIELDS:
                    raise InputError(f"line {ln}: field {name!r} must not be empty")
                kwargs[name] = None
            elif name in _INT_FIELDS:
                kwargs[name] = int(raw)
            elif name in _STR_FIELDS:
                kwargs[name] = raw
            else:
                kwargs[name] = float(raw)
        records.append(TrialRecord(**kwargs))
    return records


def write_csv(records: Iterable[TrialRecord], path: str) -> None:
    """Write records to ``path``, or to stdout when path is '-'."""
    text = emit_csv(records)
    if path == "-":
        sys.stdout.write(text)
    else:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)


def spot_check(
    config: ExperimentConfig,
    records: list[TrialRecord],
    fraction: float = 0.01,
    rng: np.random.Generator | None = None,
) -> int:
    """Re-run a random fraction of trials and compare records bit-for-bit.

    Raises NumericalError on the first mismatch; returns the number of
    trials re-run. The runner (rank-1 vs rank-r) is inferred from config.r.
    """
    if not (0.0 < fraction <= 1.0):
        raise InputError(f"fraction must lie in (0, 1], got {fraction!r}")
    if rng is None:
        rng = np.random.default_rng(config.base_seed)
    worker = _run_trial_rank1 if config.r == 1 else _run_trial_rankr
    tasks = [
        (n, a, noise, scheme, t)
        for (n, a, noise, scheme) in config.cells()
        for t in range(config.trials)
    ]
    by_key: dict[tuple, list[TrialRecord]] = {}
    for rec in records:
        by_key.setdefault((rec.seed, rec.method, rec.k), []).append(rec)
    n_check = max(1, math.ceil(fraction * len(tasks)))
    chosen = rng.choice(len(tasks), size=min(n_check, len(tasks)), replace=False)
    for ti in sorted(int(i) for i in chosen):
        n, a, noise, scheme, t = tasks[ti]
        fresh = worker(config, n, a, noise, scheme, t, False)
        for rec in fresh:
            key = (rec.seed, rec.method, rec.k)
            match = by_key.get(key, [])
            if len(match) != 1:
                raise NumericalError(
                    f"spot check: expected exactly one stored record for {key}, "
                    f"found {len(match)}"
                )
            stored = match[0]
            for f in fields(TrialRecord):
                if f.name == "wall_ms":
                    continue
                if getattr(stored, f.name) != getattr(rec, f.name):
                    raise NumericalError(
                        f"spot check mismatch on field {f.name!r} for {key}: "
                        f"stored {getattr(stored, f.name)!r} vs fresh {getattr(rec, f.name)!r}"
                    )
    return len(chosen)
