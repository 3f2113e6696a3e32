import numpy as np
import pytest

from dadist import algebra as alg
from dadist.errors import (ConfigurationError, DegenerateInputError, DomainError,
                           SingularityError)
from dadist.jacobians import (SVD_TAU, Transform, apply_transform, gram_pushforward_logweight,
                              log_jacobian, numeric_jacobian, numeric_log_jacobian,
                              stereo_exponent, svd_logweight)
from dadist.suites import JACOBIAN_KINDS, _jacobian_draw


@pytest.mark.parametrize("beta", [1, 2, 4])
@pytest.mark.parametrize("kind", JACOBIAN_KINDS)
def test_closed_form_matches_finite_differences(kind, beta):
    rng = np.random.default_rng([beta, JACOBIAN_KINDS.index(kind)])
    for _ in range(5):
        t, x = _jacobian_draw(kind, rng, beta)
        assert log_jacobian(t, x) == pytest.approx(numeric_log_jacobian(t, x), abs=1e-6)


def test_alternative_stereo_exponent_disagrees():
    rng = np.random.default_rng(1)
    t, x = _jacobian_draw("stereo_matrix_scalar", rng, 1)
    strict = Transform("stereo_matrix", t.n, t.m, 1, alt_exponent=True)
    assert abs(log_jacobian(strict, x) - numeric_log_jacobian(strict, x)) > 1e-2
    assert stereo_exponent(1, 3, 1) == -(3 / 2 + 1)
    assert stereo_exponent(1, 3, 1, alt_exponent=True) == -(5 / 2 + 1)


def test_scalar_stereographic_example():
    assert round(log_jacobian(Transform("stereo_trace", 1, 1), np.array([[[0.6]]])), 6) \
        == 0.669431


def test_stereo_maps_are_mutually_inverse():
    rng = np.random.default_rng(2)
    y = rng.standard_normal((3, 2, 2))
    fwd = Transform("stereo_matrix", 3, 2, 2)
    bwd = Transform("stereo_matrix", 3, 2, 2, direction="backward")
    x = apply_transform(bwd, y)
    assert np.allclose(apply_transform(fwd, x), y, atol=1e-12)
    assert log_jacobian(fwd, x) == pytest.approx(-log_jacobian(bwd, y), abs=1e-10)


def test_domain_and_singularity_errors():
    t = Transform("stereo_trace", 1, 1)
    with pytest.raises(DomainError):
        log_jacobian(t, np.array([[[1.2]]]))
    with pytest.raises(SingularityError):
        log_jacobian(t, np.array([[[np.sqrt(1 - 1e-14)]]]))
    with pytest.raises(DomainError):
        log_jacobian(Transform("inverse", 2, 2), -alg.eye(2, 1))
    with pytest.raises(SingularityError):
        log_jacobian(Transform("linear", 2, 1, A=np.zeros((2, 2, 1)), B=np.ones((1, 1, 1))),
                     np.ones((2, 1, 1)))
    with pytest.raises(ConfigurationError):
        Transform("linear", 2, 1)
    with pytest.raises(ConfigurationError):
        Transform("rotation", 2, 1)


def test_numeric_jacobian_step_bounds():
    with pytest.raises(ConfigurationError):
        numeric_jacobian(lambda v: v, np.ones(2), h=1e-2)
    assert numeric_jacobian(lambda v: 3 * v, np.ones(2)) == pytest.approx(2 * np.log(3))


def test_gram_weight_integrates_wishart_normalizer():
    # int over S>0 of the gram weight times exp(-tr S/2) equals
    # (2 pi)^{nm/2} / Vol(V_{m,n}) for beta = 1, m = 1
    n = 3
    w = gram_pushforward_logweight(np.array([[[2.0]]]), n, 1)
    assert w == pytest.approx(-np.log(2.0) + (n / 2.0 - 1.0) * np.log(2.0))


def test_svd_weight_checks_and_scalar_case():
    with pytest.raises(DegenerateInputError):
        svd_logweight([1.0, 1.0], 3, beta=1)
    with pytest.raises(DegenerateInputError):
        svd_logweight([1.0, 2.0], 3, beta=1)
    d = 1.7
    assert svd_logweight([d], 2, beta=2) == pytest.approx(
        -np.log(2.0) + SVD_TAU[2] * np.log(np.pi) + (2 * 2 - 1) * np.log(d))
