"""Command-line interface.

Subcommands: ``simulate rank1``, ``simulate rankr``, ``estimate``,
``entropy cover``, ``entropy pack``, ``plot``. Exit codes: 0 success,
1 usage error, 2 invalid input or file problem, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import json
import math
import sys

import numpy as np

from .entropy import enumerate_cover_T, greedy_packing, verify_cover
from .errors import InputError, NumericalError
from .estimators import EIG_ESTIMATORS, RefinedRankOne, RefinedRankR
from .experiments import (
    ExperimentConfig,
    SummaryRow,
    parse_csv,
    run_rank1,
    run_rankr,
    spot_check,
    summarize,
    write_csv,
)
from .signals import NOISE_KINDS, SCHEMES
from .support import ALPHA_MODES
from .svg import PALETTE, Series, render_line_chart
from .validation import symmetrize

_CONFIG_FIELDS = (
    "n_grid", "a_values", "noise", "scheme", "r", "trials", "base_seed",
    "alpha_mode", "beta", "eig_estimator", "sigma_mode", "sigma2",
    "lambda_rule", "lambda_values",
)


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise _UsageError(message)


def _int_list(text: str) -> tuple[int, ...]:
    try:
        return tuple(int(p) for p in text.split(",") if p != "")
    except ValueError:
        raise InputError(f"expected a comma-separated integer list, got {text!r}") from None


def _float_list(text: str) -> tuple[float, ...]:
    try:
        return tuple(float(p) for p in text.split(",") if p != "")
    except ValueError:
        raise InputError(f"expected a comma-separated float list, got {text!r}") from None


def _str_list(text: str) -> tuple[str, ...]:
    return tuple(p for p in text.split(",") if p != "")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="eigrefine", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    sim = sub.add_parser("simulate", help="run Monte Carlo sweeps")
    sim_sub = sim.add_subparsers(dest="simulate_kind", required=True)
    for kind in ("rank1", "rankr"):
        p = sim_sub.add_parser(kind, help=f"{kind} sweep")
        p.add_argument("--n", default=None, help="comma list of matrix sizes")
        p.add_argument("--a", default=None, help="comma list of spike weights in (0,1)")
        p.add_argument("--noise", default=None, help=f"comma list from {NOISE_KINDS}")
        p.add_argument("--scheme", default=None, help=f"comma list from {SCHEMES}")
        p.add_argument("--trials", type=int, default=None)
        p.add_argument("--seed", type=int, default=None, help="base seed")
        p.add_argument("--alpha-mode", choices=ALPHA_MODES, default=None)
        p.add_argument("--beta", type=float, default=None)
        p.add_argument("--sigma", choices=("plugin", "known"), default=None,
                       help="noise variance given to the estimators")
        p.add_argument("--sigma2", type=float, default=None,
                       help="true noise variance of the generator")
        p.add_argument("--eig-estimator", choices=EIG_ESTIMATORS, default=None)
        p.add_argument("--lambda", dest="lambda_spec", default=None,
                       help="'sqrt_nlogn', 'ladder', or comma list of values")
        if kind == "rankr":
            p.add_argument("--r", type=int, default=None)
        p.add_argument("--config", default=None, help="JSON config file")
        p.add_argument("--out", default="-", help="output CSV path ('-' = stdout)")
        p.add_argument("--jobs", type=int, default=1, help="worker threads")
        p.add_argument("--timings", action="store_true",
                       help="fill wall_ms (breaks byte-reproducibility)")
        p.add_argument("--spot-check", action="store_true",
                       help="re-run 1%% of trials and verify records match")

    est = sub.add_parser("estimate", help="refine eigenvectors of one matrix")
    est.add_argument("--input", required=True, help="matrix text file: n then n*n reals")
    est.add_argument("--r", type=int, default=1)
    est.add_argument("--sigma", default="auto", help="'auto' or a nonnegative float")
    est.add_argument("--alpha-mode", choices=ALPHA_MODES, default="grid")
    est.add_argument("--beta", type=float, default=0.0)
    est.add_argument("--eig-estimator", choices=EIG_ESTIMATORS, default="debiased")
    est.add_argument("--seed", type=int, default=0, help="seed for internal rotations")
    est.add_argument("--json", dest="json_out", default="-",
                     help="output JSON path ('-' = stdout)")

    ent = sub.add_parser("entropy", help="covering and packing computations")
    ent_sub = ent.add_subparsers(dest="entropy_kind", required=True)
    cov = ent_sub.add_parser("cover", help="enumerate the lattice cover")
    cov.add_argument("--n", type=int, required=True)
    cov.add_argument("--r", type=int, required=True)
    cov.add_argument("--s", type=int, required=True)
    cov.add_argument("--cap", type=int, default=10**6)
    cov.add_argument("--verify", action="store_true",
                     help="check the covering property on random profiles")
    cov.add_argument("--draws", type=int, default=200)
    cov.add_argument("--seed", type=int, default=0)
    cov.add_argument("--list", action="store_true", dest="list_elements",
                     help="print every cover element")
    pack = ent_sub.add_parser("pack", help="greedy packing count")
    pack.add_argument("--n", type=int, required=True)
    pack.add_argument("--r", type=int, required=True)
    pack.add_argument("--mu", type=float, required=True)
    pack.add_argument("--delta", type=float, required=True)
    pack.add_argument("--budget", type=int, default=5000)
    pack.add_argument("--seed", type=int, default=0)

    plot = sub.add_parser("plot", help="summary chart from a results CSV")
    plot.add_argument("--input", required=True)
    plot.add_argument("--metric", choices=("d_inf", "d_2inf"), default="d_inf")
    plot.add_argument("--out", required=True, help="output SVG path")
    plot.add_argument("--k", type=int, default=None,
                      help="column index to plot (default: the only one present)")
    plot.add_argument("--noise", default=None)
    plot.add_argument("--scheme", default=None)
    plot.add_argument("--level", type=float, default=0.95)
    plot.add_argument("--bootstrap", type=int, default=1000)
    plot.add_argument("--seed", type=int, default=0)

    return parser


def _load_config_file(path: str) -> dict:
    with open(path, "r", encoding="utf-8") as fh:
        try:
            data = json.load(fh)
        except json.JSONDecodeError as exc:
            raise InputError(f"config file {path}: invalid JSON ({exc})") from None
    if not isinstance(data, dict):
        raise InputError(f"config file {path}: top level must be an object")
    unknown = sorted(set(data) - set(_CONFIG_FIELDS))
    if unknown:
        raise InputError(
            f"config file {path}: unknown keys {unknown}; allowed keys are "
            f"{sorted(_CONFIG_FIELDS)}"
        )
    return data


def _build_config(args, kind: str) -> ExperimentConfig:
    settings: dict = {}
    if args.config is not None:
        settings.update(_load_config_file(args.config))

    flags: dict = {}
    if args.n is not None:
        flags["n_grid"] = _int_list(args.n)
    if args.a is not None:
        flags["a_values"] = _float_list(args.a)
    if args.noise is not None:
        flags["noise"] = _str_list(args.noise)
    if args.scheme is not None:
        flags["scheme"] = _str_list(args.scheme)
    if args.trials is not None:
        flags["trials"] = args.trials
    if args.seed is not None:
        flags["base_seed"] = args.seed
    if args.alpha_mode is not None:
        flags["alpha_mode"] = args.alpha_mode
    if args.beta is not None:
        flags["beta"] = args.beta
    if args.sigma is not None:
        flags["sigma_mode"] = args.sigma
    if args.sigma2 is not None:
        flags["sigma2"] = args.sigma2
    if args.eig_estimator is not None:
        flags["eig_estimator"] = args.eig_estimator
    if getattr(args, "r", None) is not None:
        flags["r"] = args.r
    if args.lambda_spec is not None:
        if args.lambda_spec in ("sqrt_nlogn", "ladder"):
            flags["lambda_rule"] = args.lambda_spec
            flags["lambda_values"] = None
        else:
            flags["lambda_rule"] = "explicit"
            flags["lambda_values"] = _float_list(args.lambda_spec)
    settings.update(flags)

    if kind == "rank1":
        settings["r"] = 1
    else:
        settings.setdefault("r", 2)
        settings.setdefault("lambda_rule", "ladder")
    # JSON arrays arrive as lists; the config dataclass normalizes tuples.
    if settings.get("lambda_values") is not None:
        settings["lambda_values"] = tuple(settings["lambda_values"])
    return ExperimentConfig(**settings)


def _cmd_simulate(args) -> int:
    kind = args.simulate_kind
    config = _build_config(args, kind)
    runner = run_rank1 if kind == "rank1" else run_rankr
    records = runner(config, jobs=args.jobs, timings=args.timings)
    write_csv(records, args.out)
    if args.out != "-":
        print(f"wrote {len(records)} records to {args.out}", file=sys.stderr)
    if args.spot_check:
        checked = spot_check(config, records)
        print(f"spot check passed ({checked} trials re-run)", file=sys.stderr)
    return 0


def _read_matrix(path: str) -> np.ndarray:
    with open(path, "r", encoding="utf-8") as fh:
        tokens = fh.read().split()
    if not tokens:
        raise InputError(f"{path}: empty matrix file")
    try:
        n = int(tokens[0])
    except ValueError:
        raise InputError(f"{path}: first token must be the dimension n") from None
    if n < 1:
        raise InputError(f"{path}: dimension must be positive, got {n}")
    if len(tokens) != 1 + n * n:
        raise InputError(
            f"{path}: expected {n * n} entries after the dimension, got {len(tokens) - 1}"
        )
    try:
        vals = np.array([float(t) for t in tokens[1:]], dtype=np.float64)
    except ValueError as exc:
        raise InputError(f"{path}: non-numeric matrix entry ({exc})") from None
    A = vals.reshape(n, n)
    return symmetrize(A, name=path, tol=1e-9)


def _cmd_estimate(args) -> int:
    Y = _read_matrix(args.input)
    n = Y.shape[0]
    if args.r < 1 or args.r > n:
        raise InputError(f"--r must lie in [1, {n}], got {args.r}")
    sigma2 = "auto" if args.sigma == "auto" else _nonneg_float(args.sigma, "--sigma")
    out: dict = {"n": n, "r": args.r, "estimates": []}

    if args.r == 1:
        est = RefinedRankOne(
            beta=args.beta, alpha_mode=args.alpha_mode, sigma2=sigma2,
            eig_estimator=args.eig_estimator, conjugate=False,
            random_state=args.seed,
        ).fit(Y)
        out["sigma2_hat"] = est.sigma2_hat_
        out["estimates"].append({
            "k": 1,
            "lambda_raw": est.lambda_raw_,
            "lambda_hat": est.lambda_hat_,
            "clamped": est.lambda_clamped_,
            "alpha_hat": est.alpha_hat_,
            "support_size": est.support_size_,
            "relaxed_gap": est.relaxed_gap_,
            "refined_count": est.refined_count_,
            "fallback": est.fallback_,
            "u_hat": [float(v) for v in est.u_hat_],
        })
    else:
        if args.eig_estimator == "support_sum":
            raise InputError("--eig-estimator support_sum is rank-1 only")
        est = RefinedRankR(
            r=args.r, sigma2=sigma2, eig_estimator=args.eig_estimator,
            random_state=args.seed,
        ).fit(Y)
        out["sigma2_hat"] = est.sigma2_hat_
        for k in range(1, args.r + 1):
            out["estimates"].append({
                "k": k,
                "lambda_raw": float(est.eigenvalues_raw_[k - 1]),
                "lambda_hat": float(est.lambda_hats_[k - 1]),
                "clamped": est.lambda_clamped_[k - 1],
                "alpha_hat": est.alpha_hats_[k - 1],
                "support_size": est.support_sizes_[k - 1],
                "refined_count": est.refined_counts_[k - 1],
                "fallback": est.fallbacks_[k - 1],
                "u_hat": [float(v) for v in est.components_[:, k - 1]],
            })

    text = json.dumps(out, indent=2, sort_keys=True) + "\n"
    if args.json_out == "-":
        sys.stdout.write(text)
    else:
        with open(args.json_out, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    return 0


def _nonneg_float(text: str, flag: str) -> float:
    try:
        value = float(text)
    except ValueError:
        raise InputError(f"{flag} must be 'auto' or a float, got {text!r}") from None
    if not (math.isfinite(value) and value >= 0.0):
        raise InputError(f"{flag} must be nonnegative, got {text!r}")
    return value


def _cmd_entropy_cover(args) -> int:
    cover = enumerate_cover_T(args.n, args.r, args.s, cap=args.cap)
    print(
        f"cover n={cover.n} r={cover.r} s={cover.s}: elements={cover.size} "
        f"binomial_bound={cover.binomial_bound}"
    )
    if args.list_elements:
        for z in cover.z_tuples:
            print(" ".join(str(v) for v in z))
    if args.verify:
        rng = np.random.default_rng(args.seed)
        worst = verify_cover(cover, args.draws, rng)
        bound = 1.0 / math.sqrt(args.s)
        print(
            f"verify: draws={args.draws} max_deviation={worst!r} bound={bound!r}"
        )
    return 0


def _cmd_entropy_pack(args) -> int:
    rng = np.random.default_rng(args.seed)
    count = greedy_packing(
        args.n, args.r, args.mu, args.delta, args.budget, rng
    )
    print(
        f"packing n={args.n} r={args.r} mu={args.mu!r} delta={args.delta!r}: "
        f"accepted={count} budget={args.budget}"
    )
    return 0


def _cmd_plot(args) -> int:
    with open(args.input, "r", encoding="utf-8", newline="") as fh:
        records = parse_csv(fh.read())
    if not records:
        raise InputError(f"{args.input}: no records")

    noises = sorted({rec.noise for rec in records})
    if args.noise is not None:
        records = [rec for rec in records if rec.noise == args.noise]
    elif len(noises) > 1:
        raise InputError(f"multiple noise kinds present {noises}; pass --noise")
    schemes = sorted({rec.scheme for rec in records})
    if args.scheme is not None:
        records = [rec for rec in records if rec.scheme == args.scheme]
    elif len(schemes) > 1:
        raise InputError(f"multiple schemes present {schemes}; pass --scheme")
    if not records:
        raise InputError("no records left after filtering")

    with_metric = [rec for rec in records if getattr(rec, args.metric) is not None]
    ks = sorted({rec.k for rec in with_metric})
    if args.k is not None:
        k = args.k
        if k not in ks:
            raise InputError(f"no {args.metric} rows with k={k}; available k: {ks}")
    elif len(ks) == 1:
        k = ks[0]
    elif 0 in ks and args.metric == "d_2inf":
        k = 0
    else:
        raise InputError(f"multiple column indices present {ks}; pass --k")
    with_metric = [rec for rec in with_metric if rec.k == k]

    rows = summarize(
        with_metric, metric=args.metric, level=args.level, b=args.bootstrap,
        seed=args.seed,
    )
    by_line: dict[tuple[float, str], list[SummaryRow]] = {}
    for row in rows:
        by_line.setdefault((row.a, row.method), []).append(row)

    series = []
    a_sorted = sorted({a for (a, _) in by_line})
    for a in a_sorted:
        for method in ("spectral", "refined"):
            group = by_line.get((a, method))
            if not group:
                continue
            group = sorted(group, key=lambda row: row.n)
            series.append(Series(
                label=f"a={a:g} {method}",
                x=tuple(row.n for row in group),
                y=tuple(row.mean for row in group),
                lo=tuple(row.ci_low for row in group),
                hi=tuple(row.ci_high for row in group),
                color=PALETTE[1] if method == "spectral" else PALETTE[0],
                dashed=(method == "spectral"),
            ))
    if not series:
        raise InputError(f"no plottable {args.metric} values in {args.input}")

    noise = args.noise or noises[0]
    scheme = args.scheme or schemes[0]
    doc = render_line_chart(
        series,
        title=f"mean {args.metric} vs n ({noise} noise, {scheme} scheme, k={k})",
        x_label="n",
        y_label=f"mean {args.metric}",
        desc=(
            f"percentile bootstrap {args.level:g} CI of the mean, "
            f"B={args.bootstrap}, seed={args.seed}"
        ),
    )
    with open(args.out, "w", encoding="utf-8", newline="") as fh:
        fh.write(doc)
    print(f"wrote {args.out}", file=sys.stderr)
    return 0


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if args.command == "simulate":
            return _cmd_simulate(args)
        if args.command == "estimate":
            return _cmd_estimate(args)
        if args.command == "entropy":
            if args.entropy_kind == "cover":
                return _cmd_entropy_cover(args)
            return _cmd_entropy_pack(args)
        return _cmd_plot(args)
    except _UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 1
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        name = getattr(exc, "filename", None)
        where = f" ({name})" if name else ""
        print(f"error: {exc}{where}", file=sys.stderr)
        return 2
    except NumericalError as exc:
        print(f"numerical error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
