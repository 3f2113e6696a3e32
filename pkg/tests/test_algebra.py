import numpy as np
import pytest

from dadist import algebra as alg
from dadist.algebra import DAMatrix, HermitianPD
from dadist.errors import (ConfigurationError, DomainError, SingularityError,
                           UnsupportedAlgebraError)


def random_herm(rng, m, beta):
    x = rng.standard_normal((m, m, beta))
    return 0.5 * (x + alg.conj_transpose(x, beta))


@pytest.mark.parametrize("beta", [2, 4])
def test_embedding_is_a_homomorphism(rng, beta):
    x = rng.standard_normal((50, 3, 2, beta))
    y = rng.standard_normal((50, 2, 4, beta))
    lhs = alg.embed(alg.mat_mul(x, y, beta), beta)
    rhs = alg.embed(x, beta) @ alg.embed(y, beta)
    assert np.max(np.abs(lhs - rhs)) < 1e-12


@pytest.mark.parametrize("beta", [1, 2, 4])
def test_unembed_inverts_embed(rng, beta):
    x = rng.standard_normal((3, 2, beta))
    assert np.allclose(alg.unembed(alg.embed(x, beta), beta), x, atol=1e-15)


def test_quaternion_units_anticommute():
    i = np.array([[[0.0, 1, 0, 0]]])
    j = np.array([[[0.0, 0, 1, 0]]])
    k = np.array([[[0.0, 0, 0, 1]]])
    assert np.allclose(alg.mat_mul(i, j, 4), k)
    assert np.allclose(alg.mat_mul(j, i, 4), -k)
    assert np.allclose(alg.mat_mul(i, i, 4), -np.array([[[1.0, 0, 0, 0]]]))


def test_octonion_products_need_scalar_order():
    x = np.ones((1, 1, 8))
    assert alg.mat_mul(x, np.array([[[2.0] + [0.0] * 7]]), 8).shape == (1, 1, 8)
    with pytest.raises(UnsupportedAlgebraError):
        alg.mat_mul(np.ones((1, 2, 8)), np.ones((2, 1, 8)), 8)
    with pytest.raises(UnsupportedAlgebraError):
        DAMatrix(np.ones((2, 2, 8)), 8)


def test_octonion_column_norm():
    x = DAMatrix(np.arange(16.0).reshape(2, 1, 8), 8)
    assert alg.trace_gram(x) == pytest.approx(np.sum(np.arange(16.0) ** 2))


def test_quaternion_eigenvalues_come_in_pairs(rng):
    s = random_herm(rng, 4, 4)
    lam = alg.eigvalsh_batch(s, 4)
    assert np.max(np.abs(lam[::2] - lam[1::2])) < 1e-10
    assert np.allclose(alg.eigh_spectrum(s, 4), lam[::2])


@pytest.mark.parametrize("beta", [1, 2, 4])
def test_logdet_matches_embedding(rng, beta):
    z = rng.standard_normal((5, 3, beta))
    s = alg.gram_batch(z, beta)
    full = np.linalg.slogdet(alg.embed(s, beta))[1]
    # the quaternion embedding doubles the order
    expected = 0.5 * full if beta == 4 else full
    assert alg.logdet_batch(s, beta) == pytest.approx(expected, abs=1e-10)


def test_matrix_functions_compose(rng):
    z = rng.standard_normal((6, 3, 4))
    s = alg.gram_batch(z, 4)
    r = alg.sqrtm_batch(s, 4)
    assert np.allclose(alg.mat_mul(r, r, 4), s, atol=1e-10)
    inv = alg.invm_batch(s, 4)
    assert np.allclose(alg.mat_mul(inv, s, 4), alg.eye(3, 4), atol=1e-10)
    isq = alg.invsqrtm_batch(s, 4)
    assert np.allclose(alg.mat_mul(alg.mat_mul(isq, s, 4), isq, 4), alg.eye(3, 4), atol=1e-10)


def test_non_finite_input_gives_nan_not_crash():
    s = np.full((1, 2, 2, 2), np.nan)
    assert np.all(np.isnan(alg.sqrtm_batch(s, 2)))


@pytest.mark.parametrize("beta", [1, 2, 4])
def test_hermitian_coordinates_roundtrip(rng, beta):
    s = random_herm(rng, 3, beta)
    c = alg.herm_coords(s, beta)
    assert c.shape == (alg.herm_dim(3, beta),)
    assert np.allclose(alg.herm_from_coords(c, 3, beta), s)


def test_hermitian_pd_validation():
    with pytest.raises(DomainError) as exc:
        HermitianPD(np.array([[1.0, 2.0], [0.0, 1.0]]), 1)
    assert exc.value.predicates == ["hermitian"]
    with pytest.raises(DomainError) as exc:
        HermitianPD(np.array([[1.0, 0.0], [0.0, -1.0]]), 1)
    assert exc.value.predicates == ["pd"]
    assert HermitianPD(2.0, 4).data.shape == (1, 1, 4)


def test_damatrix_operations():
    a = DAMatrix([[[1.0, 1.0, 1.0, 1.0]]], beta=4)
    assert alg.trace_gram(a) == 4.0
    b = a @ a.H
    assert np.allclose(b.data, [[[4.0, 0, 0, 0]]])
    assert (2 * a - a).allclose(a)
    with pytest.raises(ConfigurationError):
        a @ DAMatrix([[1.0]], beta=1)
    with pytest.raises(DomainError):
        DAMatrix([[[np.inf]]], beta=1)


def test_gram_of_rank_deficient_matrix_raises():
    with pytest.raises(SingularityError):
        alg.gram(DAMatrix(np.ones((3, 2)), 1))
    with pytest.raises(SingularityError):
        alg.gram(DAMatrix(np.ones((1, 2)), 1))


def test_check_beta_rejects_other_dimensions():
    with pytest.raises(ConfigurationError):
        alg.check_beta(3)
