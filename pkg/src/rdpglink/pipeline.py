"""Experiment orchestration: data, embedding, combination, evaluation."""

from __future__ import annotations

import json
import os
import re
import time
from dataclasses import asdict, dataclass, field, replace
from typing import Callable

import numpy as np

from .embed import EUCLIDEAN, INDEFINITE, OMNIBUS_MAX_ROWS, embed_series, mase
from .errors import ConfigurationError
from .evaluate import SubsampleScheme, auc_difference_ci, evaluate_method
from .forecast import DEFAULT_PERIOD, SariBounds
from .graph import GraphKind, SnapshotSeries, collapse_weighted, read_edge_list, read_series, uniform_weights
from .graph import EdgeListFormat
from .score import (
    MAX_FORECAST_SERIES,
    baseline_aip,
    score_aip,
    score_collapsed,
    score_cosie_aip,
    score_cosie_ipa,
    score_ipa,
    score_ipp_cosie,
    score_ipp_embedding,
    score_pip_embeddings,
    score_predicted_adjacency,
    stream_init,
    stream_update,
)
from .simulate import LogisticDynConfig, SeasonalSbmConfig, logistic_dynamic, seasonal_sbm
from .spectral import select_dim_elbow, truncated_svd

__all__ = [
    "METHOD_TAGS",
    "METHODS",
    "ExperimentConfig",
    "ExperimentResult",
    "load_config",
    "load_data",
    "derive_seed",
    "choose_dimension",
    "run_experiment",
    "compare_methods",
]

METHOD_TAGS = (
    "collapsed-avg",
    "collapsed-pred",
    "ase-aip",
    "ase-ipa",
    "ase-pip",
    "ase-ipp",
    "omni-aip",
    "omni-ipa",
    "cosie-aip",
    "cosie-ipa",
    "cosie-ipp",
    "stream-ff",
    "baseline-aa",
    "baseline-jaccard",
)

_STREAM_RE = re.compile(r"^stream-ff(?:\((?P<lam>[0-9.eE+-]+)\))?$")


def derive_seed(root: int, purpose: str) -> int:
    """Child seed of ``root`` for a named purpose (data, subsampling, ...)."""
    key = [int(root)] + [ord(c) for c in purpose]
    return int(np.random.SeedSequence(key).generate_state(1)[0])


@dataclass
class ExperimentConfig:
    """One experiment, serializable as JSON.

    ``data`` is either ``{"series_dir": path}``, ``{"edge_list": path,
    "kind": ..., "delimiter": ...}`` or ``{"simulate": "seasonal-sbm" |
    "logistic-dynamic", "params": {...}}``; simulator and subsampling seeds
    derive from ``seed``. ``d`` is an integer or ``"elbow"``. The stream
    method may be written ``stream-ff(0.9)``.
    """

    data: dict
    method: str
    t_prime: int
    d: int | str = "elbow"
    sequential: bool = False
    s: int = DEFAULT_PERIOD
    bounds: dict = field(default_factory=lambda: asdict(SariBounds()))
    scheme: dict = field(default_factory=lambda: {"variant": "uniform_zeros", "sample_count": None})
    seed: int = 0
    forgetting: float = 1.0
    metric: str = INDEFINITE
    max_rank: int = 50

    def __post_init__(self):
        m = _STREAM_RE.match(self.method)
        if m and m.group("lam") is not None:
            self.forgetting = float(m.group("lam"))
            self.method = "stream-ff"

    @property
    def tag(self) -> str:
        return f"stream-ff({self.forgetting:g})" if self.method == "stream-ff" else self.method

    def sari_bounds(self) -> SariBounds:
        return SariBounds(**self.bounds)

    def subsample_scheme(self) -> SubsampleScheme:
        return SubsampleScheme(self.scheme.get("variant", "uniform_zeros"), self.scheme.get("sample_count"),
                               derive_seed(self.seed, "subsample"))

    def to_dict(self) -> dict:
        return asdict(self)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=1, sort_keys=True)

    @classmethod
    def from_dict(cls, doc: dict) -> "ExperimentConfig":
        known = set(cls.__dataclass_fields__)
        unknown = set(doc) - known
        if unknown:
            raise ConfigurationError(f"unknown configuration keys: {sorted(unknown)}")
        return cls(**doc)


def load_config(path) -> ExperimentConfig:
    with open(path, encoding="utf-8") as fh:
        return ExperimentConfig.from_dict(json.load(fh))


def load_data(cfg: ExperimentConfig):
    """Return (series, ground truth or None)."""
    data = cfg.data
    if "series_dir" in data:
        return read_series(data["series_dir"]), None
    if "edge_list" in data:
        fmt = EdgeListFormat(delimiter=data.get("delimiter"))
        return read_edge_list(data["edge_list"], fmt, GraphKind(data.get("kind", "undirected"))), None
    if "simulate" in data:
        params = dict(data.get("params", {}))
        if "seed" in params:
            raise ConfigurationError("simulator seeds derive from the root seed; drop params.seed")
        params["seed"] = derive_seed(cfg.seed, "data")
        if data["simulate"] == "seasonal-sbm":
            return seasonal_sbm(SeasonalSbmConfig(**params))
        if data["simulate"] == "logistic-dynamic":
            return logistic_dynamic(LogisticDynConfig(**params))
        raise ConfigurationError(f"unknown simulator {data['simulate']!r}")
    raise ConfigurationError("data must name series_dir, edge_list or simulate")


def choose_dimension(train: SnapshotSeries, d, max_rank: int = 50) -> int:
    """Fixed ``d`` or the profile-likelihood elbow of the collapsed training matrix."""
    if d != "elbow":
        return int(d)
    C = collapse_weighted(train, uniform_weights(train.T))
    k = min(max_rank, min(train.shape) - 1)
    if k < 3:
        return 1
    return select_dim_elbow(truncated_svd(C, k).s)


# ---- method table -------------------------------------------------------


@dataclass(frozen=True)
class Method:
    """How one tag turns a training window into score matrices.

    ``scorer(ctx, window, horizons)`` returns ``horizons`` score matrices for
    the snapshots following ``window``. ``needs`` names the embedding stage.
    """

    scorer: Callable
    needs: str
    forecasts: bool = False


class _Context:
    """Per-experiment caches; individual embeddings are computed once per snapshot."""

    def __init__(self, cfg: ExperimentConfig, series: SnapshotSeries, d: int):
        self.cfg = cfg
        self.series = series
        self.d = d
        self.bounds = cfg.sari_bounds()
        self.diagnostics: dict = {}
        self._individual: dict = {}

    @property
    def embed_method(self):
        return "individual-ase" if self.series.kind is GraphKind.UNDIRECTED else "individual-dase"

    def individual(self, window: SnapshotSeries):
        out = []
        for t, A in enumerate(window.snapshots):
            if t not in self._individual:
                single = window.with_snapshots([A])
                e = embed_series(single, self.d, self.embed_method)[0]
                self._individual[t] = replace(e, snapshot_id=t)
            out.append(self._individual[t])
        return out


def _repeat(score, horizons):
    return [score.relabel(horizon=h + 1) for h in range(horizons)]


def _collapsed_avg(ctx, window, horizons):
    return _repeat(score_collapsed(window, ctx.d, metric=ctx.cfg.metric), horizons)


def _collapsed_pred(ctx, window, horizons):
    out = score_predicted_adjacency(window, ctx.d, horizons, ctx.cfg.s, ctx.bounds, metric=ctx.cfg.metric)
    ctx.diagnostics["degenerate_fits"] = ctx.diagnostics.get("degenerate_fits", 0) + out[0].info["degenerate"]
    return out


def _ase_aip(ctx, window, horizons):
    return _repeat(score_aip(ctx.individual(window), metric=ctx.cfg.metric), horizons)


def _ase_ipa(ctx, window, horizons):
    return _repeat(score_ipa(ctx.individual(window)), horizons)


def _ase_pip(ctx, window, horizons):
    out = score_pip_embeddings(ctx.individual(window), horizons, ctx.cfg.s, ctx.bounds, metric=ctx.cfg.metric)
    ctx.diagnostics["degenerate_fits"] = ctx.diagnostics.get("degenerate_fits", 0) + out[0].info["degenerate"]
    return out


def _ase_ipp(ctx, window, horizons):
    return score_ipp_embedding(ctx.individual(window), horizons, ctx.cfg.s, ctx.bounds)


def _omni(ctx, window):
    return embed_series(window, ctx.d, "omnibus")


def _omni_aip(ctx, window, horizons):
    return _repeat(score_aip(_omni(ctx, window), metric=ctx.cfg.metric), horizons)


def _omni_ipa(ctx, window, horizons):
    return _repeat(score_ipa(_omni(ctx, window), align=False, metric=ctx.cfg.metric), horizons)


def _cosie_aip(ctx, window, horizons):
    return _repeat(score_cosie_aip(mase(window, ctx.d)), horizons)


def _cosie_ipa(ctx, window, horizons):
    return _repeat(score_cosie_ipa(mase(window, ctx.d)), horizons)


def _cosie_ipp(ctx, window, horizons):
    return score_ipp_cosie(mase(window, ctx.d), horizons, ctx.cfg.s, ctx.bounds)


def _stream(ctx, window, horizons):
    embs = ctx.individual(window)
    state = stream_init(embs[0], ctx.cfg.forgetting, ctx.cfg.metric)
    for e in embs[1:]:
        state = stream_update(state, e)
    return _repeat(state.score().relabel(method_tag=ctx.cfg.tag), horizons)


def _baseline(name):
    def run(ctx, window, horizons):
        return _repeat(baseline_aip(window, name), horizons)

    return run


METHODS = {
    "collapsed-avg": Method(_collapsed_avg, "collapse"),
    "collapsed-pred": Method(_collapsed_pred, "collapse", forecasts=True),
    "ase-aip": Method(_ase_aip, "individual"),
    "ase-ipa": Method(_ase_ipa, "individual"),
    "ase-pip": Method(_ase_pip, "individual", forecasts=True),
    "ase-ipp": Method(_ase_ipp, "individual", forecasts=True),
    "omni-aip": Method(_omni_aip, "omnibus"),
    "omni-ipa": Method(_omni_ipa, "omnibus"),
    "cosie-aip": Method(_cosie_aip, "mase"),
    "cosie-ipa": Method(_cosie_ipa, "mase"),
    "cosie-ipp": Method(_cosie_ipp, "mase", forecasts=True),
    "stream-ff": Method(_stream, "individual"),
    "baseline-aa": Method(_baseline("adamic-adar"), "none"),
    "baseline-jaccard": Method(_baseline("jaccard"), "none"),
}

if set(METHODS) != set(METHOD_TAGS):  # pragma: no cover - guards edits to the table
    raise RuntimeError("method table does not cover every method tag")


def _validate(cfg: ExperimentConfig, series: SnapshotSeries):
    if cfg.method not in METHODS:
        raise ConfigurationError(f"unknown method {cfg.method!r}; choose from {METHOD_TAGS}")
    if not 1 <= cfg.t_prime < series.T:
        raise ConfigurationError(f"t_prime must satisfy 1 <= t_prime < T={series.T}")
    if cfg.d != "elbow" and (not isinstance(cfg.d, int) or cfg.d < 1):
        raise ConfigurationError("d must be a positive integer or 'elbow'")
    if cfg.metric not in (INDEFINITE, EUCLIDEAN):
        raise ConfigurationError(f"unknown inner product {cfg.metric!r}")
    if not 0.0 <= cfg.forgetting <= 1.0:
        raise ConfigurationError("forgetting factor must lie in [0, 1]")
    method = METHODS[cfg.method]
    if method.needs == "omnibus" and series.shape[0] * series.T > OMNIBUS_MAX_ROWS:
        raise ConfigurationError(
            f"omnibus needs {series.shape[0] * series.T} rows, above the cap of {OMNIBUS_MAX_ROWS}"
        )
    if cfg.method.startswith("baseline") and series.kind is GraphKind.BIPARTITE:
        raise ConfigurationError("common-neighbour baselines need a unipartite graph")
    if cfg.method == "ase-pip":
        n1, n2 = series.shape
        count = n1 * (n1 - 1) // 2 if series.kind is GraphKind.UNDIRECTED else n1 * n2
        if count > MAX_FORECAST_SERIES:
            raise ConfigurationError(f"ase-pip would fit {count} series, above {MAX_FORECAST_SERIES}")
    try:
        cfg.sari_bounds()
        cfg.subsample_scheme()
    except (TypeError, ValueError) as exc:
        raise ConfigurationError(str(exc)) from exc


@dataclass
class ExperimentResult:
    report: object
    scores: list
    d: int
    timings: dict


def _scores(cfg, series, d):
    ctx = _Context(cfg, series, d)
    method = METHODS[cfg.method]
    T, tp = series.T, cfg.t_prime
    timings = {}
    start = time.perf_counter()
    if not cfg.sequential:
        window = series.with_snapshots(series.snapshots[:tp])
        scores = method.scorer(ctx, window, T - tp)
    else:
        scores = []
        for k in range(T - tp):
            # snapshot tp + k is revealed only after it has been scored
            window = series.with_snapshots(series.snapshots[:tp + k])
            scores.append(method.scorer(ctx, window, 1)[0].relabel(horizon=1))
    timings["scoring_seconds"] = time.perf_counter() - start
    tag = cfg.tag + (" [sequential]" if cfg.sequential else "")
    scores = [s.relabel(method_tag=tag) for s in scores]
    return scores, ctx.diagnostics, timings


def run_experiment(cfg: ExperimentConfig, out_dir=None, series: SnapshotSeries | None = None) -> ExperimentResult:
    """Train on snapshots 1..t_prime and evaluate on the rest.

    Non-sequential runs score every test snapshot from the training window;
    sequential runs score snapshot t from snapshots 1..t-1. With ``out_dir``
    the report (JSON), the ``t,auc`` curve (CSV), the resolved config and
    the wall-clock timings are written there; timings live in their own file
    so that reports are reproducible byte for byte.
    """
    timings = {}
    start = time.perf_counter()
    if series is None:
        series, _ = load_data(cfg)
    timings["load_seconds"] = time.perf_counter() - start
    _validate(cfg, series)

    start = time.perf_counter()
    train = series.with_snapshots(series.snapshots[:cfg.t_prime])
    d = choose_dimension(train, cfg.d, cfg.max_rank)
    timings["dimension_seconds"] = time.perf_counter() - start

    scores, diagnostics, t_score = _scores(cfg, series, d)
    timings.update(t_score)

    start = time.perf_counter()
    test = series.with_snapshots(series.snapshots[cfg.t_prime:])
    report = evaluate_method(scores, test, cfg.subsample_scheme(), history=series, first_t=cfg.t_prime + 1,
                             method_tag=scores[0].method_tag)
    report.notes.update({
        "d": d,
        "t_prime": cfg.t_prime,
        "T": series.T,
        "n": list(series.shape),
        "kind": series.kind.value,
        "sequential": cfg.sequential,
        "inner_product": cfg.metric,
        "ever_active_window": f"1..{series.T}",
        **diagnostics,
    })
    timings["evaluation_seconds"] = time.perf_counter() - start

    if out_dir is not None:
        os.makedirs(out_dir, exist_ok=True)
        report.write_json(os.path.join(out_dir, "report.json"))
        report.write_csv(os.path.join(out_dir, "auc.csv"))
        with open(os.path.join(out_dir, "config.json"), "w", encoding="utf-8") as fh:
            fh.write(cfg.to_json() + "\n")
        with open(os.path.join(out_dir, "timings.json"), "w", encoding="utf-8") as fh:
            json.dump(timings, fh, indent=1, sort_keys=True)
    return ExperimentResult(report, scores, d, timings)


def compare_methods(cfgs, m: int = 100, level: float = 0.95, out_path=None, series=None) -> dict:
    """Paired AUC-difference intervals of every config against the first.

    All configs must share the data source, t_prime and root seed, so each
    repetition draws the same negative sample for both methods.
    """
    cfgs = list(cfgs)
    if len(cfgs) < 2:
        raise ConfigurationError("compare needs at least two configurations")
    base = cfgs[0]
    for c in cfgs[1:]:
        if (c.data, c.t_prime, c.seed, c.scheme) != (base.data, base.t_prime, base.seed, base.scheme):
            raise ConfigurationError("compared configs must share data, t_prime, seed and scheme")
    if series is None:
        series, _ = load_data(base)
    results = [run_experiment(c, series=series) for c in cfgs]
    test = series.with_snapshots(series.snapshots[base.t_prime:])
    scheme = base.subsample_scheme()
    comparisons = []
    for c, res in zip(cfgs[1:], results[1:]):
        intervals = auc_difference_ci(results[0].scores, res.scores, test, scheme, m=m, level=level,
                                      history=series, first_t=base.t_prime + 1)
        comparisons.append({
            "a": results[0].scores[0].method_tag,
            "b": res.scores[0].method_tag,
            "intervals": [asdict(iv) for iv in intervals],
        })
    doc = {"m": m, "level": level, "comparisons": comparisons}
    if out_path is not None:
        with open(out_path, "w", encoding="utf-8") as fh:
            json.dump(doc, fh, indent=1, sort_keys=True)
    return doc
