import json

import numpy as np
import pytest

from rdpglink.errors import ConfigurationError
from rdpglink.graph import write_series
from rdpglink.pipeline import (
    METHOD_TAGS,
    METHODS,
    ExperimentConfig,
    compare_methods,
    load_data,
    run_experiment,
)

from conftest import random_series

SBM = {"simulate": "seasonal-sbm", "params": {}}
SMALL = {"simulate": "seasonal-sbm", "params": {"n": 40, "T": 24, "K": 3}}


def cfg(**kw):
    base = {"data": SBM, "method": "ase-aip", "t_prime": 80, "d": 5, "seed": 3}
    base.update(kw)
    return ExperimentConfig(**base)


def test_sbm_defaults_twenty_aucs():
    res = run_experiment(cfg())
    aucs = [a for _, a in res.report.per_snapshot_auc]
    assert [t for t, _ in res.report.per_snapshot_auc] == list(range(81, 101))
    assert len(aucs) == 20 and all(0.0 <= a <= 1.0 for a in aucs)
    assert res.report.mean_auc > 0.55


def test_stream_lambda_one_equals_sequential_aip():
    c = dict(data=SMALL, t_prime=18, d=3, seed=1, sequential=True)
    a = run_experiment(ExperimentConfig(method="stream-ff(1)", **c))
    b = run_experiment(ExperimentConfig(method="ase-aip", **c))
    for sa, sb in zip(a.scores, b.scores):
        rows, cols = np.nonzero(np.ones((40, 40)))
        np.testing.assert_allclose(sa.at(rows, cols), sb.at(rows, cols), atol=1e-10, rtol=0)


def test_reports_byte_identical(tmp_path):
    c = ExperimentConfig(data=SMALL, method="ase-aip", t_prime=18, seed=9,
                         scheme={"variant": "zeros_plus_ever_active", "sample_count": 50})
    run_experiment(c, out_dir=tmp_path / "a")
    run_experiment(c, out_dir=tmp_path / "b")
    for name in ("report.json", "auc.csv", "config.json"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()
    assert json.loads((tmp_path / "a" / "timings.json").read_text())["scoring_seconds"] >= 0


def test_config_json_roundtrip(tmp_path):
    c = cfg(method="stream-ff(0.5)")
    assert c.method == "stream-ff" and c.forgetting == 0.5 and c.tag == "stream-ff(0.5)"
    assert ExperimentConfig.from_dict(json.loads(c.to_json())) == c
    with pytest.raises(ConfigurationError):
        ExperimentConfig.from_dict({"data": SBM, "method": "ase-aip", "t_prime": 3, "colour": 1})


@pytest.mark.parametrize("kw", [
    {"method": "nope"},
    {"t_prime": 24},
    {"t_prime": 0},
    {"d": 0},
    {"metric": "cosine"},
    {"forgetting": 1.5},
    {"bounds": {"p": -1}},
    {"scheme": {"variant": "bogus"}},
])
def test_invalid_configs_rejected_before_compute(kw):
    with pytest.raises(ConfigurationError):
        run_experiment(cfg(**{"data": SMALL, "t_prime": 18, **kw}))


def test_simulator_seed_must_derive_from_root():
    with pytest.raises(ConfigurationError):
        load_data(cfg(data={"simulate": "seasonal-sbm", "params": {"seed": 1}}))


def test_baselines_reject_bipartite(tmp_path):
    series = random_series(8, 5, 0.3, 0, kind="bipartite", n2=6)
    with pytest.raises(ConfigurationError):
        run_experiment(cfg(method="baseline-aa", t_prime=3), series=series)


def test_method_table_exhaustive():
    assert set(METHODS) == set(METHOD_TAGS)
    assert len({id(m.scorer) for m in METHODS.values()}) >= len(METHOD_TAGS) - 2


@pytest.mark.parametrize("method", METHOD_TAGS)
def test_non_sequential_never_reads_test_snapshots(method):
    series = random_series(16, 10, 0.25, 4)
    other = random_series(16, 10, 0.6, 5)
    tampered = series.with_snapshots(series.snapshots[:7] + other.snapshots[7:])
    c = ExperimentConfig(data=SMALL, method=method, t_prime=7, d=2, seed=0, s=3,
                         bounds={"p": 1, "P": 1})
    a = run_experiment(c, series=series).scores
    b = run_experiment(c, series=tampered).scores
    rows, cols = np.nonzero(~np.eye(16, dtype=bool))
    for sa, sb in zip(a, b):
        np.testing.assert_array_equal(sa.at(rows, cols), sb.at(rows, cols))


def test_compare_self_contains_zero():
    c = cfg(data=SMALL, t_prime=18)
    doc = compare_methods([c, cfg(data=SMALL, t_prime=18)], m=20)
    for iv in doc["comparisons"][0]["intervals"]:
        assert iv["lower"] <= 0.0 <= iv["upper"]


def test_compare_requires_shared_setup():
    with pytest.raises(ConfigurationError):
        compare_methods([cfg(), cfg(seed=4)])
    with pytest.raises(ConfigurationError):
        compare_methods([cfg()])


def test_more_repetitions_narrow_intervals():
    series, _ = load_data(cfg(data=SMALL, t_prime=18))
    scheme = {"variant": "uniform_zeros", "sample_count": 40}
    a = cfg(data=SMALL, t_prime=18, scheme=scheme)
    b = cfg(data=SMALL, t_prime=18, scheme=scheme, method="collapsed-avg")
    w100 = compare_methods([a, b], m=100, series=series)["comparisons"][0]["intervals"]
    w25 = compare_methods([a, b], m=25, series=series)["comparisons"][0]["intervals"]
    for x, y in zip(w100, w25):
        assert x["upper"] - x["lower"] < y["upper"] - y["lower"]


@pytest.mark.slow
def test_pip_beats_aip_significantly():
    series, _ = load_data(cfg())
    bounds = {"p": 2, "P": 2}
    doc = compare_methods([cfg(method="ase-pip", bounds=bounds), cfg(bounds=bounds)], m=100, series=series)
    ivs = doc["comparisons"][0]["intervals"]
    above = sum(iv["lower"] > 0.0 for iv in ivs)
    assert above > len(ivs) / 2
