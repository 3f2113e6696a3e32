import numpy as np
import pytest
from scipy import integrate, stats

from dadist.errors import ConfigurationError, DomainError
from dadist.kernels import (Gaussian, Kotz, Pearson7, RadialTable, log_h, log_radial_normalizer,
                            parse_kernel, radial_logpdf, sample_radius_sq, student_t_kernel)

KERNELS = [Gaussian(), Pearson7(q=6.0, s=2.0), Kotz(t=2.0), Kotz(t=0.7)]


@pytest.mark.parametrize("text, expected", [
    ("gaussian", Gaussian()),
    ("pearson7:q=3.5,s=1", Pearson7(3.5, 1.0)),
    ("pearson7:q=1e1,s=.5", Pearson7(10.0, 0.5)),
    ("kotz:t=2", Kotz(2.0)),
])
def test_parse_kernel(text, expected):
    spec = parse_kernel(text)
    assert spec == expected
    assert parse_kernel(spec.to_string()) == spec


@pytest.mark.parametrize("text", ["Gaussian", "pearson7:q=3", "pearson7:s=1,q=3",
                                  "kotz:t=", "kotz t=2", "student"])
def test_parse_kernel_rejects(text):
    with pytest.raises(ConfigurationError):
        parse_kernel(text)


def test_kernel_parameter_checks():
    with pytest.raises(ConfigurationError):
        Pearson7(q=-1.0, s=1.0)
    with pytest.raises(ConfigurationError):
        Pearson7(q=2.0, s=1.0).check(4.0)
    with pytest.raises(ConfigurationError):
        Kotz(t=0.0)
    with pytest.raises(DomainError):
        log_h(Gaussian(), -1.0, 2)


@pytest.mark.parametrize("spec", KERNELS)
@pytest.mark.parametrize("dim, beta", [(1, 1), (3, 1), (4, 2), (8, 4)])
def test_radial_density_integrates_to_one(spec, dim, beta):
    val, _ = integrate.quad(lambda v: np.exp(radial_logpdf(spec, v, dim, beta)), 0, np.inf,
                            limit=200)
    assert val == pytest.approx(1.0, abs=1e-7)


def test_gaussian_generator_value():
    assert round(float(log_h(Gaussian(), 0.0, 1)), 7) == -0.9189385


def test_student_t_kernel_matches_scipy():
    nu, d = 3.0, 2
    spec = student_t_kernel(nu, d)
    x = np.array([[0.3, -1.2], [2.0, 0.5]])
    u = np.sum(x ** 2, axis=1)
    ours = log_h(spec, u, d, 1)
    ref = stats.multivariate_t(loc=np.zeros(d), shape=np.eye(d), df=nu).logpdf(x)
    assert np.allclose(ours, ref, atol=1e-12)


def test_radial_normalizer_closed_form():
    val, _ = integrate.quad(lambda v: v ** 1.5 * np.exp(log_h(Kotz(2.0), 2 * 1.3 * v, 5, 2)),
                            0, np.inf)
    assert np.log(val) == pytest.approx(log_radial_normalizer(Kotz(2.0), 1.3, 5), abs=1e-8)


@pytest.mark.parametrize("spec", KERNELS)
def test_radius_sampler_matches_density(spec):
    rng = np.random.default_rng(3)
    dim, beta = 6.0, 2
    v = sample_radius_sq(spec, dim, beta, rng, 20000)
    table = RadialTable(lambda y: radial_logpdf(spec, np.exp(y), dim, beta) + y)
    assert table.total == pytest.approx(1.0, abs=1e-9)
    p = stats.kstest(np.log(v), table.cdf_y).pvalue
    assert p > 1e-3


def test_radial_table_quantiles_invert_cdf():
    table = RadialTable(lambda y: stats.norm.logpdf(y, 1.0, 2.0))
    u = np.array([1e-6, 0.1, 0.5, 0.9, 1 - 1e-6])
    assert np.allclose(table.cdf_y(table.ppf_y(u)), u, atol=1e-10)
    assert np.allclose(table.ppf_y(u), stats.norm.ppf(u, 1.0, 2.0), atol=1e-8)
