import numpy as np
import pytest

from dadist.errors import ConfigurationError
from dadist.families import FAMILIES, FamilyId, FamilyInstance, log_density
from dadist.sampling import sample
from dadist.validation import (ScalarLaw, from_unconstrained, ks_test, log_density_unconstrained,
                               normalization_mc, normalization_quad, slot_statistic,
                               slot_statistic_law, to_unconstrained, unconstrained_dim)


def some_instance(fam, m=1, beta=2):
    spec = FAMILIES[fam]
    n = (2 + 2 * m, 1 + 2 * m, 3 + 2 * m) if spec.fixed_k == 2 else (3 + 2 * m, 2 + 2 * m)
    r = 1 if fam.value.startswith("inverse") else 0
    return FamilyInstance.from_counts(fam, beta, m, n, r=r)


@pytest.mark.parametrize("fam", list(FamilyId))
@pytest.mark.parametrize("m", [1, 2])
def test_unconstraining_roundtrip(fam, m):
    inst = some_instance(fam, m)
    pts = sample(inst, 20, seed=1)
    y = to_unconstrained(inst, pts)
    assert y.shape == (20, unconstrained_dim(inst))
    back, lj = from_unconstrained(inst, y)
    for a, b in zip(pts.slots, back.slots):
        assert np.allclose(a, b, atol=1e-8)
    assert np.all(np.isfinite(lj))


def test_unconstrained_density_includes_jacobian():
    inst = FamilyInstance("beta2-marginal", 1, 1, (1.5, 0.5))
    y = np.array([[0.3]])
    # F = exp(y): density in y is f(F) F
    f = np.exp(0.3)
    assert log_density_unconstrained(inst, y)[0] == pytest.approx(log_density(inst, f) + 0.3)


def test_cubature_and_monte_carlo_agree_on_low_dimension():
    inst = FamilyInstance.from_counts("beta1-marginal", 4, 1, (2, 1, 3))
    q = normalization_quad(inst)
    assert q.method == "cubature" and q.within(1e-8)
    mc = normalization_mc(inst, draws=50000, fit_draws=5000, seed=2)
    assert mc.within(0.02) and mc.draws == 50000


def test_cubature_refuses_high_dimension():
    inst = FamilyInstance.from_counts("pearson7-marginal", 4, 1, (3, 2))
    with pytest.raises(ConfigurationError):
        normalization_quad(inst)


def test_monte_carlo_detects_a_wrong_normalizer():
    inst = FamilyInstance("beta2-marginal", 1, 1, (1.5, 0.5))
    from dadist import validation
    orig = validation.log_density_unconstrained
    try:
        validation.log_density_unconstrained = lambda i, y: orig(i, y) + np.log(1.1)
        res = validation.normalization_mc(inst, draws=20000, fit_draws=2000, seed=0)
    finally:
        validation.log_density_unconstrained = orig
    assert res.estimate == pytest.approx(1.1, rel=0.02)


def test_scalar_law_supports():
    from scipy import stats
    law = ScalarLaw(stats.beta(2, 3).logpdf, "unit")
    assert law.mass == pytest.approx(1.0, abs=1e-10)
    assert law.cdf(0.4) == pytest.approx(stats.beta(2, 3).cdf(0.4), abs=1e-10)
    law = ScalarLaw(stats.lognorm(0.5, loc=1).logpdf, "above_one")
    assert law.cdf(2.0) == pytest.approx(stats.lognorm(0.5, loc=1).cdf(2.0), abs=1e-10)


def test_rectangular_statistic_law():
    inst = FamilyInstance.from_counts("pearson7-marginal", 2, 1, (3, 2))
    law = slot_statistic_law(inst)
    assert law.mass == pytest.approx(1.0, abs=1e-8)
    pts = sample(inst, 5000, seed=0)
    assert ks_test(slot_statistic(inst, pts), law) > 1e-3
    with pytest.raises(ConfigurationError):
        slot_statistic_law(FamilyInstance.from_counts("beta2-marginal", 1, 1, (3, 2, 2)))
