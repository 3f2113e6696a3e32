import numpy as np
import pytest
from scipy import stats

from dadist.errors import ConfigurationError, DomainError
from dadist.families import (FAMILIES, FamilyId, FamilyInstance, FamilyPoint, check_domain,
                             family_from_name, log_density, reduce_known, trace_partner)
from dadist.kernels import Gaussian, Pearson7
from dadist.sampling import sample
from dadist.validation import normalization_mc


def instance(fam, beta=2, m=1, kernel=None):
    spec = FAMILIES[fam]
    n = (2, 1, 3) if spec.fixed_k == 2 else (3, 2)
    if m > 1:
        n = tuple(x + 2 * m for x in n)
    r = 1 if fam.value.startswith("inverse") else 0
    return FamilyInstance.from_counts(fam, beta, m, n, kernel=kernel, r=r)


def test_family_names_roundtrip():
    assert len(FamilyId) == 28
    for fam in FamilyId:
        assert family_from_name(fam.value) is fam
    assert family_from_name("Beta2_Marginal") is FamilyId.BETA2_MARGINAL
    with pytest.raises(ConfigurationError):
        family_from_name("beta3-marginal")


def test_reference_value():
    inst = FamilyInstance("beta2-marginal", 1, 1, (1.5, 0.5))
    assert round(log_density(inst, {"F": 1.0}), 6) == -1.837877
    assert log_density(inst, 1.0) == log_density(inst, [1.0]) == log_density(inst, {"F1": 1.0})


def test_beta1_reduction_example():
    inst = FamilyInstance("beta1-marginal", 1, 1, (1.5, 0.5))
    assert np.exp(log_density(inst, 0.5)) == pytest.approx(2 / np.pi, abs=1e-12)


@pytest.mark.parametrize("fam", list(FamilyId))
@pytest.mark.parametrize("beta, m", [(1, 1), (4, 1), (8, 1), (2, 2)])
def test_samples_are_in_domain_with_finite_density(fam, beta, m):
    inst = instance(fam, beta, m)
    pts = sample(inst, 64, seed=5)
    assert check_domain(inst, pts) == []
    assert np.all(np.isfinite(log_density(inst, pts)))


@pytest.mark.parametrize("fam", list(FamilyId))
def test_normalization_smoke(fam):
    kernel = "pearson7:q=12,s=1" if FAMILIES[fam].kernel else None
    res = normalization_mc(instance(fam, 2, 1, kernel), draws=40000, fit_draws=5000, seed=1)
    assert abs(res.estimate - 1.0) < max(0.03, 5 * res.error)


def test_matric_and_trace_forms_agree_at_order_one():
    for fam in FamilyId:
        partner = trace_partner(fam)
        if partner is None or FAMILIES[fam].fixed_k == 2:
            continue
        a, b = instance(fam, 4), instance(partner, 4)
        pts = sample(a, 50, seed=2)
        slots = [s[:, 0, 0, 0] if s.ndim == 4 and kind == "scalar" else s
                 for s, kind in zip(pts.slots, b.slot_kinds())]
        other = b.point(*slots, batched=True)
        assert np.allclose(log_density(a, pts), log_density(b, other), atol=1e-10), fam


def test_domain_errors_name_predicates():
    inst = FamilyInstance("beta1-marginal", 2, 1, (1.5, 1.0))
    with pytest.raises(DomainError) as exc:
        log_density(inst, 1.5)
    assert exc.value.predicates == ["trace_lt_one"]
    matric = FamilyInstance("beta1-matric-marginal", 2, 1, (1.5, 1.0))
    with pytest.raises(DomainError) as exc:
        log_density(matric, 1.5)
    assert "I_minus_B_pd" in exc.value.predicates
    bad = np.array([[[1.0, 0.3]]])
    assert "hermitian" in check_domain(inst, inst.point(bad))
    with pytest.raises(DomainError) as exc:
        log_density(FamilyInstance("pearson7-marginal", 1, 1, (1.5, 0.5)), np.nan)
    assert exc.value.predicates == ["finite"]


def test_parameter_validation():
    with pytest.raises(ConfigurationError):
        FamilyInstance("beta2-matric-marginal", 1, 3, (0.9, 2.0))    # below the pole
    with pytest.raises(ConfigurationError):
        FamilyInstance("pearson7-marginal", 1, 1, (1.5, 0.7))       # n1 not an integer
    with pytest.raises(ConfigurationError):
        FamilyInstance("beta2-marginal", 1, 1, (1.5, 0.5), kernel="gaussian")
    with pytest.raises(ConfigurationError):
        FamilyInstance("gamma-pearson7", 1, 1, (1.5, 0.5), kernel="pearson7:q=1,s=1")
    with pytest.raises(ConfigurationError):
        FamilyInstance("beta2-marginal", 1, 1, (1.5, 0.5), r=1)
    with pytest.raises(ConfigurationError):
        FamilyInstance("tri-gamma-b2-b1", 1, 1, (1.0, 1.0))


def test_point_coercion_and_batching():
    inst = FamilyInstance.from_counts("pearson7-marginal", 2, 1, (3, 2))
    x = np.array([[[0.1, 0.2]], [[0.3, -0.1]]])
    single = log_density(inst, x)
    batch = log_density(inst, inst.point(x[None], batched=True))
    assert np.shape(batch) == (1,) and batch[0] == pytest.approx(single)
    with pytest.raises(ConfigurationError):
        inst.point(np.zeros((3, 1, 2)))
    pts = sample(inst, 10, seed=0)
    assert pts[3].size == 1 and pts[2:5].size == 3


def test_kernel_defaults_to_gaussian():
    inst = FamilyInstance("gamma-beta2", 1, 1, (1.0, 1.0))
    assert isinstance(inst.kernel, Gaussian)
    assert isinstance(FamilyInstance("gamma-beta2", 1, 1, (1.0, 1.0),
                                     kernel="pearson7:q=5,s=1").kernel, Pearson7)


def test_classical_reductions():
    rng = np.random.default_rng(0)
    inst = FamilyInstance.from_counts("beta2-marginal", 1, 1, (5, 3))
    law = reduce_known(inst)
    assert law.name == "beta-prime" and law.params["a"] == 1.5 and law.params["b"] == 2.5
    x = rng.gamma(2.0, size=30)
    ours = log_density(inst, inst.point(x, batched=True))
    assert np.allclose(ours, stats.betaprime(1.5, 2.5).logpdf(x), atol=1e-12)
    t = reduce_known(FamilyInstance.from_counts("pearson7-marginal", 1, 1, (1, 1)))
    assert t.name == "cauchy"
    assert reduce_known(FamilyInstance.from_counts("wishart-t", 1, 2, (4, 2))) is None
