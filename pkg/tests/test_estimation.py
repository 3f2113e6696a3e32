import numpy as np
import pytest

from dadist.errors import ConfigurationError, DomainError
from dadist.estimation import (FitProblem, fit, log_likelihood, parse_tie, profile,
                               tied_beta2_loglik)
from dadist.families import FamilyInstance
from dadist.sampling import sample


@pytest.fixture(scope="module")
def synthetic():
    inst = FamilyInstance("beta2-marginal", 4, 1, (2.0,) + (3.0,) * 6)
    return FitProblem("beta2-marginal", 4, 1, [sample(inst, 300, seed=5)])


def test_parse_tie_forms():
    assert parse_tie(None, 3) == ((0,), (1, 2, 3))
    assert parse_tie("free", 2) == ((0,), (1,), (2,))
    assert parse_tie("all", 2) == ((0, 1, 2),)
    assert parse_tie("0|1,2|3", 3) == ((0,), (1, 2), (3,))
    for bad in ("0|1", "0|1,1|2", "x"):
        with pytest.raises(ConfigurationError):
            parse_tie(bad, 2)


def test_closed_form_likelihood_matches_generic(synthetic):
    F = synthetic.stacked.slots
    values = np.stack([s[:, 0, 0, 0] for s in F], axis=1)
    assert log_likelihood(synthetic, [1.7, 2.4]) == pytest.approx(
        tied_beta2_loglik(values, 1.7, 2.4, 4), rel=1e-11)


def test_fit_recovers_parameters(synthetic):
    res = fit(synthetic, restarts=8, seed=1)
    assert res.converged
    assert res.estimates["a0"] == pytest.approx(2.0, rel=0.15)
    assert res.estimates["a"] == pytest.approx(3.0, rel=0.15)
    assert set(res.stderr) == {"a0", "a"}
    assert len(res.trace) == 8
    assert res.loglik == pytest.approx(log_likelihood(synthetic, res.params))
    d = res.to_dict()
    assert {"estimates", "loglik", "converged", "trace"} <= set(d)


def test_fit_is_deterministic_and_thread_independent(synthetic):
    a = fit(synthetic, restarts=4, seed=3, stderr=False)
    b = fit(synthetic, restarts=4, seed=3, stderr=False, threads=2)
    assert a.params.tolist() == b.params.tolist()


def test_box_constrained_space_agrees(synthetic):
    a = fit(synthetic, restarts=4, seed=0, stderr=False)
    b = fit(synthetic, restarts=4, seed=0, stderr=False, space="a")
    assert np.allclose(a.params, b.params, rtol=1e-5)


def test_infeasible_parameters_raise(synthetic):
    with pytest.raises(DomainError):
        log_likelihood(synthetic, [-1.0, 2.0])
    prof = profile(synthetic, [2.0, 3.0], "a0", [-1.0, 2.0])
    assert prof[0][1] == -np.inf and np.isfinite(prof[1][1])


def test_profile_peaks_near_the_estimate(synthetic):
    res = fit(synthetic, restarts=4, seed=0, stderr=False)
    grid = res.params[1] * np.array([0.9, 1.0, 1.1])
    ll = [v for _, v in profile(synthetic, res.params, "a", grid)]
    assert ll[1] >= max(ll[0], ll[2])
    with pytest.raises(ConfigurationError):
        profile(synthetic, res.params, "b", grid)


def test_data_outside_the_domain():
    with pytest.raises(DomainError):
        FitProblem.from_arrays("beta1-marginal", 1, 1, [[0.2, 1.4]])
    with pytest.raises(ConfigurationError):
        FitProblem("gamma-beta2", 1, 1, [])


def test_rectangular_families_fit_only_a0():
    inst = FamilyInstance.from_counts("pearson7-marginal", 1, 1, (6, 2))
    prob = FitProblem("pearson7-marginal", 1, 1, [sample(inst, 500, seed=0)])
    assert prob.group_labels() == ["a0"]
    res = fit(prob, restarts=4, seed=0)
    assert res.estimates["a0"] == pytest.approx(3.0, rel=0.25)
    with pytest.raises(ConfigurationError):
        FitProblem("pearson7-marginal", 1, 1, [sample(inst, 5, seed=0)], tie="free")


def test_matrix_arguments():
    inst = FamilyInstance("beta1-matric-marginal", 2, 2, (3.0, 2.5, 2.5))
    prob = FitProblem("beta1-matric-marginal", 2, 2, [sample(inst, 400, seed=1)])
    res = fit(prob, restarts=4, seed=0, stderr=False)
    assert res.estimates["a0"] == pytest.approx(3.0, rel=0.2)
    assert res.estimates["a"] == pytest.approx(2.5, rel=0.2)
