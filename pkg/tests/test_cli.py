import json
import os

import numpy as np
import pytest

from rdpglink.cli import main
from rdpglink.graph import read_series


@pytest.fixture
def series_dir(tmp_path):
    out = tmp_path / "sbm"
    assert main(["simulate", "--n", "30", "--K", "2", "--T", "12", "--s", "3", "--seed", "4",
                 "--out-dir", str(out)]) == 0
    return out


def test_simulate_writes_series_and_truth(series_dir, tmp_path):
    series = read_series(series_dir)
    assert series.T == 12 and series.n == 30
    truth = json.loads((series_dir / "ground_truth.json").read_text())
    assert truth["config"]["K"] == 2
    out = tmp_path / "logit"
    assert main(["simulate", "--model", "logistic-dynamic", "--n", "10", "--T", "5", "--out-dir", str(out)]) == 0
    assert read_series(out).kind.value == "directed"


@pytest.mark.parametrize("method", ["individual-ase", "omnibus", "mase"])
def test_embed(series_dir, tmp_path, method):
    out = tmp_path / method
    assert main(["embed", "--series", str(series_dir), "--d", "2", "--method", method, "--out-dir", str(out)]) == 0
    assert os.listdir(out)


def test_score_then_evaluate_matches_experiment(series_dir, tmp_path, capsys):
    train = read_series(series_dir)
    train_dir = tmp_path / "train"
    from rdpglink.graph import write_series
    write_series(train.with_snapshots(train.snapshots[:9]), train_dir)
    scores = tmp_path / "scores"
    assert main(["score", "--series", str(train_dir), "--method", "ase-aip", "--d", "2", "--horizon", "3",
                 "--out-dir", str(scores)]) == 0
    files = sorted(str(p) for p in scores.iterdir())
    assert len(files) == 3
    ev = tmp_path / "ev"
    assert main(["evaluate", "--series", str(series_dir), "--t-prime", "9", "--scores", *files,
                 "--seed", "1", "--out-dir", str(ev)]) == 0
    report = json.loads((ev / "report.json").read_text())

    ex = tmp_path / "ex"
    assert main(["experiment", "--series", str(series_dir), "--method", "ase-aip", "--d", "2",
                 "--t-prime", "9", "--seed", "1", "--out-dir", str(ex)]) == 0
    direct = json.loads((ex / "report.json").read_text())
    np.testing.assert_allclose([a for _, a in report["per_snapshot_auc"]],
                               [a for _, a in direct["per_snapshot_auc"]], atol=1e-9)


def test_binary_scores_roundtrip(series_dir, tmp_path):
    out = tmp_path / "bin"
    assert main(["score", "--series", str(series_dir), "--method", "collapsed-avg", "--d", "2",
                 "--format", "binary", "--out-dir", str(out)]) == 0
    assert (out / "score_h001").is_dir()


def test_evaluate_wrong_file_count(series_dir, tmp_path, capsys):
    code = main(["evaluate", "--series", str(series_dir), "--t-prime", "9", "--scores", "x",
                 "--out-dir", str(tmp_path)])
    assert code == 2 and "need 3 score files" in capsys.readouterr().err


def test_experiment_requires_seed_and_out_dir(tmp_path):
    with pytest.raises(SystemExit):
        main(["experiment", "--simulate", "seasonal-sbm", "--method", "ase-aip", "--t-prime", "5"])


def test_experiment_from_simulator_and_config(tmp_path):
    conf = tmp_path / "c.json"
    conf.write_text(json.dumps({"method": "collapsed-avg", "t_prime": 8}))
    out = tmp_path / "x"
    assert main(["experiment", "--config", str(conf), "--simulate", "seasonal-sbm",
                 "--sim-param", "n=20", "--sim-param", "T=10", "--seed", "2", "--sequential",
                 "--variant", "zeros_plus_ever_active", "--out-dir", str(out)]) == 0
    written = json.loads((out / "config.json").read_text())
    assert written["sequential"] and written["data"]["params"] == {"n": 20, "T": 10}
    assert len((out / "auc.csv").read_text().strip().splitlines()) == 3


def test_experiment_bad_method(series_dir, tmp_path, capsys):
    assert main(["experiment", "--series", str(series_dir), "--method", "x", "--t-prime", "9",
                 "--seed", "0", "--out-dir", str(tmp_path)]) == 2


def test_compare(series_dir, tmp_path, capsys):
    assert main(["compare", "--series", str(series_dir), "--methods", "ase-aip", "collapsed-avg",
                 "--t-prime", "9", "--d", "2", "--sample-count", "20", "-m", "10", "--seed", "0",
                 "--out-dir", str(tmp_path)]) == 0
    doc = json.loads((tmp_path / "compare.json").read_text())
    assert doc["m"] == 10 and len(doc["comparisons"][0]["intervals"]) == 3
    assert "intervals contain 0" in capsys.readouterr().out
