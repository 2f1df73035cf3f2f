import numpy as np
import pytest

from corrgeo.cohort import CohortDataset, Subject
from corrgeo.errors import DuplicateId, DimensionMismatch, TooFewSamples
from corrgeo.ml import make_cv_plan, run_brainage, run_classification, run_grassmann_pipeline
from corrgeo.ml.pipelines import classification_grid
from corrgeo.report import dumps
from corrgeo.synth import SynthSpec, inject_age_trend, inject_group_effect


@pytest.fixture(scope="module")
def group_cohort():
    return inject_group_effect(SynthSpec(16, (12, 12), effect_size=3.0, noise_scale=0.2, seed=1))


@pytest.fixture(scope="module")
def age_cohort():
    return inject_age_trend(SynthSpec(8, (20, 20), effect_size=2.0, noise_scale=0.2, seed=2), slope=5.0, age_noise=0.0)


def test_cohort_contracts():
    with pytest.raises(DuplicateId):
        CohortDataset([Subject("a", np.eye(2)), Subject("a", np.eye(2))])
    with pytest.raises(DimensionMismatch):
        CohortDataset([Subject("a", np.eye(2)), Subject("b", np.eye(3))])
    with pytest.raises(TooFewSamples):
        CohortDataset([Subject("a", np.eye(2))]).require_ages()


def test_classification_grid_caps_top_k():
    grid = classification_grid(28)
    assert grid == [(c, 28) for c in (0.01, 0.1, 1.0, 10.0)]
    assert classification_grid(600)[:3] == [(0.01, 100), (0.01, 500), (0.01, 600)]


def test_brainage_recovers_trend(age_cohort):
    report = run_brainage(age_cohort, "offlog", seed=3)
    assert report.aggregate["r2"]["mean"] >= 0.9
    r2 = [f["metrics"]["r2"] for f in report.folds]
    assert report.aggregate["r2"]["mean"] == pytest.approx(np.mean(r2))
    assert report.aggregate["r2"]["sd"] == pytest.approx(np.std(r2, ddof=1))
    euclid = run_brainage(age_cohort, "euclidean", seed=3)
    assert np.isfinite(euclid.aggregate["r2"]["mean"])


def test_classification_detects_effect(group_cohort):
    report = run_classification(group_cohort, "offlog", seed=4)
    assert report.aggregate["accuracy"]["mean"] >= 0.9
    assert report.extra["classes"] == {"negative": "A", "positive": "B"}


def test_reports_independent_of_threads(group_cohort):
    plan = make_cv_plan(group_cohort.binary_labels()[0], seed=5)
    a = run_classification(group_cohort, "offlog", plan, threads=1)
    b = run_classification(group_cohort, "offlog", plan, threads=4)
    assert dumps(a.folds) == dumps(b.folds)


def test_grassmann_pipeline_runs(group_cohort):
    report = run_grassmann_pipeline(group_cohort, seed=6)
    freq = report.extra["region_selection_frequency"]
    assert freq.shape == (16,) and np.all((freq >= 0) & (freq <= 1))
    assert all(1 <= f["k"] <= 15 for f in report.folds)
    assert not report.extra["degenerate"]


def test_grassmann_full_space_is_degenerate(group_cohort):
    report = run_grassmann_pipeline(group_cohort, k=16, seed=6)
    assert report.extra["degenerate"]
    assert any("k = n" in w for w in report.warnings)
    assert report.aggregate["auc"]["mean"] == 0.5
