import numpy as np
import pytest

from dadist.errors import ConfigurationError
from dadist.shapes_ingest import LandmarkSet, write_landmarks_csv
from dadist.suites import (SUITES, SuiteReport, landmark_suite, normalization_configs,
                           normalization_suite, run_suite)


def test_report_logic():
    rep = SuiteReport("x")
    rep.add("a", True, 0.0, 1.0)
    rep.add("b", False, 2.0, 1.0, expected_failure=True)
    assert rep.passed
    rep.add("c", False, 2.0, 1.0)
    d = rep.to_dict()
    assert not d["passed"] and d["failures"] == ["c"]
    rep = SuiteReport("y", skipped="no data")
    assert not rep.passed


def test_normalization_configs_cover_all_families():
    cfgs = normalization_configs()
    assert len({c.family for c in cfgs}) == 28
    assert {c.beta for c in cfgs} == {1, 2, 4} and all(c.m == 1 and c.k <= 2 for c in cfgs)
    assert all(max(c.n) <= 3 for c in cfgs)
    kernels = {type(c.kernel).__name__ for c in cfgs if c.kernel is not None}
    assert kernels == {"Gaussian", "Pearson7", "Kotz"}


def test_small_normalization_run():
    rep = normalization_suite(draws=20000, tol=0.05, configs=normalization_configs()[:4])
    assert rep.passed and len(rep.checks) >= 4


def test_unknown_suite():
    with pytest.raises(ConfigurationError):
        run_suite("nope")
    assert set(SUITES) == {"algebra", "jacobians", "normalization", "reductions", "kernels",
                           "estimation", "landmarks"}


def test_landmark_pipeline_runs_on_synthetic_outlines(tmp_path):
    rng = np.random.default_rng(1)
    sets = [LandmarkSet(f"{g}_{i}", rng.normal(size=(60, 2)))
            for g in ("small", "large", "control") for i in range(5)]
    write_landmarks_csv(tmp_path / "lm.csv", sets)
    rep = landmark_suite(str(tmp_path / "lm.csv"), restarts=2)
    assert len(rep.checks) == 6 and not rep.skipped
    assert all(np.isfinite(c.value) for c in rep.checks)
    bad = [LandmarkSet("other_1", rng.normal(size=(60, 2)))]
    write_landmarks_csv(tmp_path / "bad.csv", bad)
    with pytest.raises(ConfigurationError):
        landmark_suite(str(tmp_path / "bad.csv"))
