"""Link prediction in dynamic networks from spectral embeddings of snapshot sequences."""

from .align import gpa, indefinite_procrustes, procrustes
from .embed import ase, dase, embed_series, mase, omnibus
from .evaluate import EvalReport, SubsampleScheme, auc_difference_ci, evaluate_method, roc_auc
from .forecast import SariBounds, SariModel, SariSpec, auto_sari, fit_sari
from .graph import GraphKind, SnapshotSeries, read_series, write_series
from .pipeline import ExperimentConfig, compare_methods, run_experiment
from .score import ScoreMatrix, score_aip, score_ipa, score_pip
from .simulate import LogisticDynConfig, SeasonalSbmConfig, logistic_dynamic, seasonal_sbm
from .spectral import select_dim_elbow, truncated_eig, truncated_svd

__version__ = "0.1.0"

__all__ = [
    "EvalReport",
    "ExperimentConfig",
    "GraphKind",
    "LogisticDynConfig",
    "SariBounds",
    "SariModel",
    "SariSpec",
    "ScoreMatrix",
    "SeasonalSbmConfig",
    "SnapshotSeries",
    "SubsampleScheme",
    "ase",
    "auc_difference_ci",
    "auto_sari",
    "compare_methods",
    "dase",
    "embed_series",
    "evaluate_method",
    "fit_sari",
    "gpa",
    "indefinite_procrustes",
    "logistic_dynamic",
    "mase",
    "omnibus",
    "procrustes",
    "read_series",
    "roc_auc",
    "run_experiment",
    "score_aip",
    "score_ipa",
    "score_pip",
    "seasonal_sbm",
    "select_dim_elbow",
    "truncated_eig",
    "truncated_svd",
    "write_series",
]
