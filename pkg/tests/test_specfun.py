import numpy as np
import pytest
from scipy.special import gammaln, multigammaln

from dadist.errors import ConfigurationError, DomainError
from dadist.specfun import GammaArgs, log_gamma, log_mv_gamma, log_stiefel_volume, mv_gamma_pole


@pytest.mark.parametrize("m", [1, 2, 3, 5])
def test_real_case_matches_scipy(m):
    a = np.linspace(m / 2.0 + 0.01, 40.0, 25)
    assert np.allclose(log_mv_gamma(1, m, a), [multigammaln(x, m) for x in a], rtol=1e-13)


def test_order_one_is_scalar_gamma():
    for beta in (1, 2, 4, 8):
        assert log_mv_gamma(beta, 1, 3.7) == pytest.approx(gammaln(3.7), rel=1e-14)


def test_complex_quaternion_products():
    a = 4.2
    assert log_mv_gamma(2, 2, a) == pytest.approx(
        np.log(np.pi) + gammaln(a) + gammaln(a - 1.0), rel=1e-14)
    assert log_mv_gamma(4, 2, a) == pytest.approx(
        2 * np.log(np.pi) + gammaln(a) + gammaln(a - 2.0), rel=1e-14)


def test_documented_value():
    assert round(log_mv_gamma(1, 2, 1.5), 7) == 0.4515827


def test_large_arguments_stay_finite():
    assert np.isfinite(log_mv_gamma(4, 3, 5000.0))


def test_pole_boundary():
    assert mv_gamma_pole(4, 3) == 4.0
    with pytest.raises(DomainError):
        log_mv_gamma(4, 3, 4.0)
    with pytest.raises(DomainError):
        log_mv_gamma(1, 1, np.array([1.0, -1.0]))
    with pytest.raises(DomainError):
        log_gamma(0.0)


def test_gamma_args_bundle():
    assert log_mv_gamma(GammaArgs(2, 2, 3.0)) == log_mv_gamma(2, 2, 3.0)
    with pytest.raises(DomainError):
        GammaArgs(1, 0, 1.0)
    with pytest.raises(ConfigurationError):
        GammaArgs(3, 1, 1.0)


def test_stiefel_volume_spheres():
    # V_{1,n} is the unit sphere in R^{n beta}: area 2 pi^{d/2} / Gamma(d/2)
    for beta, n in ((1, 2), (1, 3), (2, 2), (4, 1)):
        d = n * beta
        assert log_stiefel_volume(beta, 1, n) == pytest.approx(
            np.log(2.0) + d / 2.0 * np.log(np.pi) - gammaln(d / 2.0), rel=1e-13)
    with pytest.raises(DomainError):
        log_stiefel_volume(1, 3, 2)
