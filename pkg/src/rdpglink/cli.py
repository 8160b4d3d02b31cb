"""Command-line interface: ``rdpglink <subcommand> ...``."""

from __future__ import annotations

import argparse
import json
import os
import sys

import numpy as np

from .embed import embed_series, mase, save_cosie, save_embeddings
from .errors import RdpgLinkError
from .evaluate import SubsampleScheme, evaluate_method
from .graph import read_series, write_series
from .pipeline import (
    METHOD_TAGS,
    ExperimentConfig,
    _Context,
    METHODS,
    choose_dimension,
    compare_methods,
    run_experiment,
)
from .score import load_score_matrix, read_score_triplets, save_score_matrix, write_score_triplets
from .simulate import LogisticDynConfig, SeasonalSbmConfig, logistic_dynamic, seasonal_sbm, write_ground_truth


def _dim(value):
    return value if value == "elbow" else int(value)


def _param(text):
    key, sep, value = text.partition("=")
    if not sep:
        raise argparse.ArgumentTypeError(f"expected key=value, got {text!r}")
    return key, json.loads(value)


def cmd_simulate(args):
    if args.model == "seasonal-sbm":
        cfg = SeasonalSbmConfig(n=args.n, K=args.K, T=args.T, s=args.s, beta_a=args.beta_a,
                                beta_b=args.beta_b, seed=args.seed)
        series, truth = seasonal_sbm(cfg)
    else:
        cfg = LogisticDynConfig(n=args.n, T=args.T, theta=args.theta, baseline_low=args.baseline_low,
                                baseline_high=args.baseline_high, seed=args.seed)
        series, truth = logistic_dynamic(cfg)
    write_series(series, args.out_dir)
    write_ground_truth(truth, cfg, os.path.join(args.out_dir, "ground_truth.json"))
    print(f"wrote {series.T} snapshots ({series.kind.value}, {series.n} nodes) to {args.out_dir}")


def cmd_embed(args):
    series = read_series(args.series)
    d = choose_dimension(series, args.d)
    if args.method == "mase":
        save_cosie(mase(series, d), args.out_dir)
    else:
        save_embeddings(embed_series(series, d, args.method), args.out_dir, args.method)
    print(f"embedded {series.T} snapshots with d={d} into {args.out_dir}")


def _all_pairs(series):
    mask = series.pair_mask()
    return np.nonzero(mask)


def cmd_score(args):
    series = read_series(args.series)
    cfg = ExperimentConfig(data={"series_dir": args.series}, method=args.method, t_prime=max(series.T - 1, 1),
                           d=args.d, s=args.s, forgetting=args.forgetting, metric=args.metric)
    if cfg.method not in METHODS:
        raise RdpgLinkError(f"unknown method {cfg.method!r}")
    d = choose_dimension(series, cfg.d)
    ctx = _Context(cfg, series, d)
    scores = METHODS[cfg.method].scorer(ctx, series, args.horizon)
    if args.pairs:
        rows, cols = np.loadtxt(args.pairs, dtype=np.int64, ndmin=2).T
    else:
        rows, cols = _all_pairs(series)
    os.makedirs(args.out_dir, exist_ok=True)
    for h, score in enumerate(scores, start=1):
        if args.format == "binary":
            save_score_matrix(score, os.path.join(args.out_dir, f"score_h{h:03d}"))
        else:
            with open(os.path.join(args.out_dir, f"score_h{h:03d}.txt"), "w", encoding="utf-8") as fh:
                write_score_triplets(score, rows, cols, fh)
    print(f"wrote {len(scores)} score matrices ({cfg.tag}, d={d}) to {args.out_dir}")


def _load_scores(path, shape):
    if os.path.isdir(path):
        return load_score_matrix(path)
    with open(path, encoding="utf-8") as fh:
        return read_score_triplets(fh, shape)


def cmd_evaluate(args):
    series = read_series(args.series)
    test = series.with_snapshots(series.snapshots[args.t_prime:])
    if len(args.scores) != test.T:
        raise RdpgLinkError(f"need {test.T} score files (one per test snapshot), got {len(args.scores)}")
    scores = [_load_scores(p, series.shape) for p in args.scores]
    scheme = SubsampleScheme(args.variant, args.sample_count, args.seed)
    report = evaluate_method(scores, test, scheme, history=series, first_t=args.t_prime + 1,
                             method_tag=args.tag)
    if any(np.isnan(a) for _, a in report.per_snapshot_auc):
        raise RdpgLinkError("score files do not cover every evaluated pair")
    os.makedirs(args.out_dir, exist_ok=True)
    report.write_json(os.path.join(args.out_dir, "report.json"))
    report.write_csv(os.path.join(args.out_dir, "auc.csv"))
    print(f"mean AUC {report.mean_auc:.4f} over {len(report.per_snapshot_auc)} snapshots")


def _experiment_config(args, method=None) -> ExperimentConfig:
    doc = {}
    if args.config:
        with open(args.config, encoding="utf-8") as fh:
            doc = json.load(fh)
    if args.series:
        doc["data"] = {"series_dir": args.series}
    elif args.simulate:
        doc["data"] = {"simulate": args.simulate, "params": dict(args.sim_param or [])}
    overrides = {
        "method": method or args.method,
        "d": args.d,
        "t_prime": args.t_prime,
        "s": args.s,
        "forgetting": args.forgetting,
        "metric": args.metric,
        "seed": args.seed,
    }
    doc.update({k: v for k, v in overrides.items() if v is not None})
    if args.sequential:
        doc["sequential"] = True
    if args.variant or args.sample_count:
        scheme = dict(doc.get("scheme", {}))
        if args.variant:
            scheme["variant"] = args.variant
        if args.sample_count:
            scheme["sample_count"] = args.sample_count
        doc["scheme"] = scheme
    for key in ("data", "method", "t_prime"):
        if key not in doc:
            raise RdpgLinkError(f"missing {key!r}: pass it as a flag or in --config")
    return ExperimentConfig.from_dict(doc)


def cmd_experiment(args):
    cfg = _experiment_config(args)
    result = run_experiment(cfg, out_dir=args.out_dir)
    print(f"{result.report.method_tag}: mean AUC {result.report.mean_auc:.4f} (d={result.d}); "
          f"report in {args.out_dir}")


def cmd_compare(args):
    methods = args.methods or [None]
    cfgs = [_experiment_config(args, m) for m in methods]
    if args.config_b:
        for path in args.config_b:
            with open(path, encoding="utf-8") as fh:
                cfgs.append(ExperimentConfig.from_dict(json.load(fh)))
    for c in cfgs:
        c.seed = cfgs[0].seed
    os.makedirs(args.out_dir, exist_ok=True)
    doc = compare_methods(cfgs, m=args.m, level=args.level, out_path=os.path.join(args.out_dir, "compare.json"))
    for comp in doc["comparisons"]:
        inside = sum(iv["lower"] <= 0.0 <= iv["upper"] for iv in comp["intervals"])
        print(f"{comp['a']} - {comp['b']}: {inside}/{len(comp['intervals'])} intervals contain 0")


def _experiment_flags(p, require_seed=True):
    p.add_argument("--config", help="JSON experiment config; flags override its fields")
    src = p.add_mutually_exclusive_group()
    src.add_argument("--series", help="series directory")
    src.add_argument("--simulate", choices=["seasonal-sbm", "logistic-dynamic"])
    p.add_argument("--sim-param", type=_param, action="append", metavar="KEY=VALUE")
    p.add_argument("--d", type=_dim)
    p.add_argument("--t-prime", type=int)
    p.add_argument("--sequential", action="store_true")
    p.add_argument("--s", type=int)
    p.add_argument("--forgetting", type=float)
    p.add_argument("--metric", choices=["indefinite", "euclidean"])
    p.add_argument("--variant", choices=["uniform_zeros", "zeros_plus_ever_active"])
    p.add_argument("--sample-count", type=int)
    p.add_argument("--seed", type=int, required=require_seed)
    p.add_argument("--out-dir", required=True)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="rdpglink", description="Link prediction in dynamic networks.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="generate a synthetic series with ground truth")
    p.add_argument("--model", choices=["seasonal-sbm", "logistic-dynamic"], default="seasonal-sbm")
    p.add_argument("--n", type=int, default=100)
    p.add_argument("--K", type=int, default=5)
    p.add_argument("--T", type=int, default=100)
    p.add_argument("--s", type=int, default=7)
    p.add_argument("--beta-a", type=float, default=1.2)
    p.add_argument("--beta-b", type=float, default=1.2)
    p.add_argument("--theta", type=float, default=0.075)
    p.add_argument("--baseline-low", type=float, default=-6.9)
    p.add_argument("--baseline-high", type=float, default=0.0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out-dir", required=True)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("embed", help="embed every snapshot of a series")
    p.add_argument("--series", required=True)
    p.add_argument("--d", type=_dim, default="elbow")
    p.add_argument("--method", choices=["individual-ase", "individual-dase", "omnibus", "mase"],
                   default="individual-ase")
    p.add_argument("--out-dir", required=True)
    p.set_defaults(func=cmd_embed)

    p = sub.add_parser("score", help="score the snapshots following a series")
    p.add_argument("--series", required=True)
    p.add_argument("--method", required=True, help=f"one of {', '.join(METHOD_TAGS)}")
    p.add_argument("--d", type=_dim, default="elbow")
    p.add_argument("--horizon", type=int, default=1)
    p.add_argument("--s", type=int, default=7)
    p.add_argument("--forgetting", type=float, default=1.0)
    p.add_argument("--metric", choices=["indefinite", "euclidean"], default="indefinite")
    p.add_argument("--pairs", help="file of 'i j' lines; default every candidate pair")
    p.add_argument("--format", choices=["triplets", "binary"], default="triplets")
    p.add_argument("--out-dir", required=True)
    p.set_defaults(func=cmd_score)

    p = sub.add_parser("evaluate", help="AUC of score dumps against the test snapshots")
    p.add_argument("--series", required=True)
    p.add_argument("--t-prime", type=int, required=True)
    p.add_argument("--scores", nargs="+", required=True, help="one triplet file or binary dir per test snapshot")
    p.add_argument("--variant", choices=["uniform_zeros", "zeros_plus_ever_active"], default="uniform_zeros")
    p.add_argument("--sample-count", type=int)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--tag", default="external")
    p.add_argument("--out-dir", required=True)
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("experiment", help="run one configured experiment")
    p.add_argument("--method")
    _experiment_flags(p)
    p.set_defaults(func=cmd_experiment)

    p = sub.add_parser("compare", help="paired AUC-difference intervals between methods")
    p.add_argument("--method", help=argparse.SUPPRESS)
    p.add_argument("--methods", nargs="+", help="methods sharing all other settings; the first is the reference")
    p.add_argument("--config-b", nargs="+", help="further full configs to compare against the first")
    p.add_argument("-m", type=int, default=100, help="subsampling repetitions")
    p.add_argument("--level", type=float, default=0.95)
    _experiment_flags(p)
    p.set_defaults(func=cmd_compare)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        args.func(args)
    except RdpgLinkError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
