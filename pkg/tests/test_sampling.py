import numpy as np
import pytest
from scipy import stats

from dadist.errors import ConfigurationError
from dadist.families import FamilyInstance
from dadist.kernels import RadialTable, radial_logpdf
from dadist.sampling import CHUNK, chunk_rng, resolve_seed, sample, sample_source
from dadist.validation import ks_test, slot_statistic, slot_statistic_law


def test_same_seed_same_draws_any_thread_count():
    inst = FamilyInstance.from_counts("wishart-beta2", 2, 2, (5, 4, 6))
    a = sample(inst, CHUNK + 17, seed=11)
    b = sample(inst, CHUNK + 17, seed=11, threads=3)
    for x, y in zip(a.slots, b.slots):
        assert np.array_equal(x, y)
    c = sample(inst, 5, seed=12)
    assert not np.array_equal(a.slots[0][:5], c.slots[0])


def test_full_chunks_do_not_depend_on_total_size():
    inst = FamilyInstance.from_counts("beta2-marginal", 4, 1, (3, 2, 2))
    small = sample(inst, CHUNK, seed=3)
    large = sample(inst, CHUNK + 100, seed=3)
    assert np.array_equal(small.slots[1], large.slots[1][:CHUNK])


def test_seed_resolution(monkeypatch):
    monkeypatch.setenv("DADIST_SEED", "42")
    assert resolve_seed(None) == 42
    assert resolve_seed(7) == 7
    monkeypatch.setenv("DADIST_SEED", "abc")
    with pytest.raises(ConfigurationError):
        resolve_seed(None)
    monkeypatch.delenv("DADIST_SEED")
    assert isinstance(resolve_seed(None), int)


def test_chunk_streams_are_independent():
    a = chunk_rng(1, 0).standard_normal(1000)
    b = chunk_rng(1, 1).standard_normal(1000)
    assert abs(np.corrcoef(a, b)[0, 1]) < 0.15


def test_zero_and_negative_sizes():
    inst = FamilyInstance.from_counts("beta1-marginal", 1, 1, (3, 1))
    assert sample(inst, 0, seed=1).size == 0
    with pytest.raises(ConfigurationError):
        sample(inst, -1, seed=1)


def test_source_blocks_have_gaussian_components():
    inst = FamilyInstance.from_counts("pearson7-marginal", 2, 1, (3, 2))
    src = sample_source(inst, 20000, rng=np.random.default_rng(0))
    x = src.X(0).ravel()
    assert np.var(x) == pytest.approx(0.5, rel=0.03)


def test_wishart_block_matches_scipy_law():
    inst = FamilyInstance.from_counts("multi-wishart", 1, 1, (4,))
    v = sample(inst, 20000, seed=4).slots[0][:, 0, 0, 0]
    assert stats.kstest(v, stats.chi2(4).cdf).pvalue > 1e-3


@pytest.mark.parametrize("fam, beta, n", [("beta2-marginal", 4, (2, 3)),
                                          ("beta1-matric-marginal", 2, (3, 1)),
                                          ("pearson2-marginal", 1, (4, 2))])
def test_samples_follow_the_density(fam, beta, n):
    inst = FamilyInstance.from_counts(fam, beta, 1, n)
    pts = sample(inst, 20000, seed=9)
    assert ks_test(slot_statistic(inst, pts), slot_statistic_law(inst)) > 1e-3


def test_kernel_dependent_head_follows_kernel():
    inst = FamilyInstance.from_counts("multi-gamma", 1, 1, (5,), kernel="kotz:t=2")
    pts = sample(inst, 20000, seed=2)
    # v0 is the squared radius of a kotz vector in dimension 5
    table = RadialTable(lambda y: radial_logpdf(inst.kernel, np.exp(y), 5.0, 1) + y)
    assert stats.kstest(np.log(pts.slots[0]), table.cdf_y).pvalue > 1e-3
