"""
Matrices over the real normed division algebras.

An ``n x m`` matrix over the algebra with real dimension ``beta`` is stored
realified as a real array of shape ``(n, m, beta)``; component ``r`` of entry
``(i, j)`` lives at ``data[i, j, r]``. Quaternion components are ordered
``(1, i, j, k)``.

Linear algebra for ``beta = 4`` goes through the complex embedding

.. math::

    a + b\\,i + c\\,j + d\\,k \\mapsto
    \\begin{pmatrix} a + b i & c + d i \\\\ -c + d i & a - b i \\end{pmatrix},

which is a ``*``-homomorphism, so determinants, inverses, eigenvalues and
square roots of Hermitian matrices can be computed on ``2m x 2m`` complex
matrices. The quaternionic (Moore) log-determinant of a Hermitian matrix is
half the log-determinant of its embedding.

Two layers are provided. The typed layer (:class:`DAMatrix`,
:class:`HermitianPD` and the functions :func:`embed_complex`, :func:`gram`,
:func:`logdet`, ...) validates its inputs. The array layer (functions with
a ``_batch`` suffix plus :func:`embed`, :func:`unembed`, :func:`mat_mul`,
:func:`conj_transpose`) works on stacks of realified arrays with arbitrary
leading batch axes and is what the density code uses.
"""
from __future__ import annotations

from enum import IntEnum

import numpy as np

from .errors import (ConfigurationError, DomainError, SingularityError,
                     UnsupportedAlgebraError)

__all__ = [
    "Algebra", "DAMatrix", "HermitianPD", "check_beta",
    "embed", "unembed", "mat_mul", "conj_transpose", "eye",
    "embed_complex", "gram", "logdet", "trace_real", "trace_gram",
    "sqrt_pd", "inv_pd",
    "gram_batch", "trace_gram_batch", "trace_real_batch",
    "trace_inner_batch", "logdet_batch", "is_pd_batch", "eigvalsh_batch",
    "sqrtm_batch", "invm_batch", "invsqrtm_batch", "herm_coords",
    "herm_from_coords", "herm_dim",
]


class Algebra(IntEnum):
    """Real normed division algebra, identified by its real dimension."""

    REAL = 1
    COMPLEX = 2
    QUATERNION = 4
    OCTONION = 8

    def check_order(self, m: int) -> None:
        """Reject octonionic matrices with more than one column."""
        if self is Algebra.OCTONION and m != 1:
            raise UnsupportedAlgebraError(
                "octonionic matrices are supported only for m = 1")


def check_beta(beta, m: int | None = None) -> int:
    """Validate ``beta`` (and ``m`` for the octonions) and return it as int."""
    try:
        alg = Algebra(int(beta))
    except ValueError:
        raise ConfigurationError(
            f"beta must be one of 1, 2, 4, 8 (got {beta!r})") from None
    if int(beta) != beta:
        raise ConfigurationError(f"beta must be an integer (got {beta!r})")
    if m is not None:
        alg.check_order(m)
    return int(alg)


# ---------------------------------------------------------------------------
# array layer
# ---------------------------------------------------------------------------

def embed(x, beta: int) -> np.ndarray:
    """Complex embedding of a stack of realified matrices.

    Parameters
    ----------
    x : array_like, shape (..., n, m, beta)
        Realified matrices.
    beta : int
        1, 2 or 4.

    Returns
    -------
    ndarray, complex, shape (..., c n, c m)
        ``c = 1`` for ``beta`` in (1, 2) and ``c = 2`` for quaternions.
    """
    x = np.asarray(x, dtype=float)
    if beta == 1:
        return x[..., 0].astype(complex)
    if beta == 2:
        return x[..., 0] + 1j * x[..., 1]
    if beta == 4:
        z1 = x[..., 0] + 1j * x[..., 1]
        z2 = x[..., 2] + 1j * x[..., 3]
        *lead, n, m = z1.shape
        out = np.empty((*lead, n, 2, m, 2), dtype=complex)
        out[..., :, 0, :, 0] = z1
        out[..., :, 0, :, 1] = z2
        out[..., :, 1, :, 0] = -np.conj(z2)
        out[..., :, 1, :, 1] = np.conj(z1)
        return out.reshape(*lead, 2 * n, 2 * m)
    raise UnsupportedAlgebraError(f"no complex embedding for beta={beta}")


def unembed(z, beta: int) -> np.ndarray:
    """Inverse of :func:`embed`.

    For ``beta = 4`` the input is first projected onto the image of the
    embedding (blockwise average), which removes rounding asymmetries left by
    eigen-decompositions.
    """
    z = np.asarray(z)
    if beta == 1:
        return np.real(z)[..., None].copy()
    if beta == 2:
        return np.stack([z.real, z.imag], axis=-1)
    if beta == 4:
        z1 = 0.5 * (z[..., 0::2, 0::2] + np.conj(z[..., 1::2, 1::2]))
        z2 = 0.5 * (z[..., 0::2, 1::2] - np.conj(z[..., 1::2, 0::2]))
        return np.stack([z1.real, z1.imag, z2.real, z2.imag], axis=-1)
    raise UnsupportedAlgebraError(f"no complex embedding for beta={beta}")


def conj_transpose(x, beta: int) -> np.ndarray:
    """Conjugate transpose of realified matrices (works for every beta)."""
    x = np.asarray(x, dtype=float)
    out = np.swapaxes(x, -3, -2).copy()
    out[..., 1:] *= -1.0
    return out


def mat_mul(x, y, beta: int) -> np.ndarray:
    """Matrix product of realified stacks, broadcasting over batch axes."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if beta == 1:
        return np.matmul(x[..., 0], y[..., 0])[..., None]
    # real 1 x 1 factors act as scalars (covers octonions at m = 1)
    if y.shape[-3:-1] == (1, 1) and not np.any(y[..., 1:]):
        return x * y[..., :1]
    if x.shape[-3:-1] == (1, 1) and not np.any(x[..., 1:]):
        return x[..., :1] * y
    if beta == 8:
        raise UnsupportedAlgebraError("octonionic matrix products are not supported")
    return unembed(np.matmul(embed(x, beta), embed(y, beta)), beta)


def eye(m: int, beta: int) -> np.ndarray:
    """Realified identity matrix of order ``m``."""
    out = np.zeros((m, m, beta))
    out[np.arange(m), np.arange(m), 0] = 1.0
    return out


def gram_batch(x, beta: int) -> np.ndarray:
    """``X^H X`` for a stack of realified ``n x m`` matrices."""
    x = np.asarray(x, dtype=float)
    if x.shape[-2] == 1:
        return np.sum(x * x, axis=(-3, -1))[..., None, None] * _unit(beta)
    return mat_mul(conj_transpose(x, beta), x, beta)


def _unit(beta):
    u = np.zeros(beta)
    u[0] = 1.0
    return u


def trace_gram_batch(x) -> np.ndarray:
    """``tr X^H X`` as the sum of all squared realified components."""
    x = np.asarray(x, dtype=float)
    return np.sum(x * x, axis=(-3, -2, -1))


def trace_real_batch(s) -> np.ndarray:
    """Trace of Hermitian matrices (sum of the real diagonal parts)."""
    s = np.asarray(s, dtype=float)
    return np.trace(s[..., 0], axis1=-2, axis2=-1)


def trace_inner_batch(a, b) -> np.ndarray:
    """``tr(A B)`` for Hermitian ``A`` and ``B``.

    For Hermitian arguments the real part of ``a_ij b_ji`` is the Euclidean
    inner product of the realified entries, so the trace is a plain sum.
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    return np.sum(a * b, axis=(-3, -2, -1))


def _as_herm(s, beta):
    s = np.asarray(s, dtype=float)
    if s.shape[-3] != s.shape[-2] or s.shape[-1] != beta:
        raise ConfigurationError(
            f"expected a stack of square matrices with beta={beta}, "
            f"got shape {s.shape}")
    return s


def eigvalsh_batch(s, beta: int) -> np.ndarray:
    """Eigenvalues of the complex embedding, ascending.

    For ``beta = 4`` every eigenvalue appears twice.
    """
    s = _as_herm(s, beta)
    if beta == 8:
        return s[..., 0, 0, :1]
    ok = np.all(np.isfinite(s), axis=(-3, -2, -1))
    if np.all(ok):
        return np.linalg.eigvalsh(embed(s, beta))
    s = np.where(ok[..., None, None, None], s, eye(s.shape[-2], beta))
    return np.where(ok[..., None], np.linalg.eigvalsh(embed(s, beta)), np.nan)


def is_pd_batch(s, beta: int) -> np.ndarray:
    """Boolean mask of positive definite Hermitian matrices (strict)."""
    s = _as_herm(s, beta)
    if s.shape[-2] == 1:
        return s[..., 0, 0, 0] > 0
    lam = eigvalsh_batch(s, beta)
    return np.all(np.isfinite(lam), axis=-1) & (lam[..., 0] > 0)


def logdet_batch(s, beta: int) -> np.ndarray:
    """Log-determinant of Hermitian positive definite matrices.

    Quaternionic matrices use the halved log-determinant of the embedding.
    Non positive definite entries give ``nan``; callers are expected to have
    checked the domain.
    """
    s = _as_herm(s, beta)
    if s.shape[-2] == 1:
        with np.errstate(invalid="ignore", divide="ignore"):
            d = s[..., 0, 0, 0]
            return np.where(d > 0, np.log(np.where(d > 0, d, 1.0)), np.nan)
    lam = np.linalg.eigvalsh(embed(s, beta))
    with np.errstate(invalid="ignore", divide="ignore"):
        ld = np.sum(np.log(np.where(lam > 0, lam, np.nan)), axis=-1)
    return 0.5 * ld if beta == 4 else ld


def _funcm(s, beta, func):
    s = _as_herm(s, beta)
    if s.shape[-2] == 1:
        out = np.zeros_like(s)
        out[..., 0, 0, 0] = func(s[..., 0, 0, 0])
        return out
    ok = np.all(np.isfinite(s), axis=(-3, -2, -1))
    if not np.all(ok):
        s = np.where(ok[..., None, None, None], s, eye(s.shape[-2], beta))
    lam, u = np.linalg.eigh(embed(s, beta))
    with np.errstate(all="ignore"):
        z = np.matmul(u * func(lam)[..., None, :], np.conj(np.swapaxes(u, -1, -2)))
    out = unembed(z, beta)
    out = np.where(ok[..., None, None, None], out, np.nan)
    # symmetrize against rounding
    return 0.5 * (out + conj_transpose(out, beta))


def funcm_batch(s, beta: int, func) -> np.ndarray:
    """Apply a real function to the spectrum of Hermitian matrices."""
    return _funcm(s, beta, func)


def eigh_spectrum(s, beta: int) -> np.ndarray:
    """The ``m`` eigenvalues of Hermitian matrices (quaternion pairs merged)."""
    lam = eigvalsh_batch(s, beta)
    return lam[..., ::2] if beta == 4 else lam


def sqrtm_batch(s, beta: int) -> np.ndarray:
    """Hermitian square root of PD matrices."""
    return _funcm(s, beta, np.sqrt)


def invsqrtm_batch(s, beta: int) -> np.ndarray:
    """Inverse Hermitian square root of PD matrices."""
    return _funcm(s, beta, lambda lam: 1.0 / np.sqrt(lam))


def invm_batch(s, beta: int) -> np.ndarray:
    """Inverse of Hermitian PD matrices."""
    return _funcm(s, beta, lambda lam: 1.0 / lam)


def herm_dim(m: int, beta: int) -> int:
    """Number of functionally independent real components of a Hermitian matrix."""
    return m + m * (m - 1) * beta // 2


def herm_coords(s, beta: int) -> np.ndarray:
    """Independent coordinates: real diagonal then upper triangle row by row."""
    s = np.asarray(s, dtype=float)
    m = s.shape[-2]
    diag = s[..., np.arange(m), np.arange(m), 0]
    iu, ju = np.triu_indices(m, 1)
    upper = s[..., iu, ju, :].reshape(*s.shape[:-3], -1)
    return np.concatenate([diag, upper], axis=-1)


def herm_from_coords(c, m: int, beta: int) -> np.ndarray:
    """Inverse of :func:`herm_coords`."""
    c = np.asarray(c, dtype=float)
    lead = c.shape[:-1]
    out = np.zeros((*lead, m, m, beta))
    out[..., np.arange(m), np.arange(m), 0] = c[..., :m]
    iu, ju = np.triu_indices(m, 1)
    up = c[..., m:].reshape(*lead, len(iu), beta)
    out[..., iu, ju, :] = up
    conj = up.copy()
    conj[..., 1:] *= -1.0
    out[..., ju, iu, :] = conj
    return out


# ---------------------------------------------------------------------------
# typed layer
# ---------------------------------------------------------------------------

class DAMatrix:
    """Immutable ``n x m`` matrix over the algebra of dimension ``beta``.

    Parameters
    ----------
    data : array_like, shape (n, m, beta)
        Realified entries.
    beta : int
        Real dimension of the algebra.

    Examples
    --------
    >>> q = DAMatrix([[[1.0, 1.0, 1.0, 1.0]]], beta=4)
    >>> trace_gram(q)
    4.0
    """

    __slots__ = ("_data", "_beta")

    def __init__(self, data, beta: int):
        arr = np.array(data, dtype=float)
        if arr.ndim == 2 and beta == 1:
            arr = arr[..., None]
        if arr.ndim != 3 or arr.shape[-1] != beta:
            raise ConfigurationError(
                f"realified matrix must have shape (n, m, {beta}), got {arr.shape}")
        if arr.shape[0] < 1 or arr.shape[1] < 1:
            raise ConfigurationError("matrix dimensions must be positive")
        check_beta(beta, arr.shape[1])
        if not np.all(np.isfinite(arr)):
            raise DomainError("matrix entries must be finite", ["finite"])
        arr.setflags(write=False)
        self._data = arr
        self._beta = int(beta)

    @classmethod
    def from_complex(cls, z, beta: int) -> "DAMatrix":
        """Build from a complex (embedded) matrix."""
        return cls(unembed(np.asarray(z, dtype=complex), beta), beta)

    @classmethod
    def zeros(cls, n: int, m: int, beta: int) -> "DAMatrix":
        return cls(np.zeros((n, m, beta)), beta)

    @classmethod
    def identity(cls, m: int, beta: int) -> "DAMatrix":
        return cls(eye(m, beta), beta)

    @property
    def data(self) -> np.ndarray:
        return self._data

    @property
    def beta(self) -> int:
        return self._beta

    @property
    def algebra(self) -> Algebra:
        return Algebra(self._beta)

    @property
    def n(self) -> int:
        return self._data.shape[0]

    @property
    def m(self) -> int:
        return self._data.shape[1]

    @property
    def shape(self) -> tuple:
        return self._data.shape[:2]

    @property
    def H(self) -> "DAMatrix":
        """Conjugate transpose."""
        return DAMatrix(conj_transpose(self._data, self._beta), self._beta)

    def _check_same(self, other):
        if not isinstance(other, DAMatrix) or other.beta != self.beta:
            raise ConfigurationError("operands must share the same algebra")

    def __matmul__(self, other: "DAMatrix") -> "DAMatrix":
        self._check_same(other)
        if self.m != other.n:
            raise ConfigurationError(
                f"non-conformable product {self.shape} @ {other.shape}")
        return DAMatrix(mat_mul(self._data, other._data, self._beta), self._beta)

    def __add__(self, other: "DAMatrix") -> "DAMatrix":
        self._check_same(other)
        return DAMatrix(self._data + other._data, self._beta)

    def __sub__(self, other: "DAMatrix") -> "DAMatrix":
        self._check_same(other)
        return DAMatrix(self._data - other._data, self._beta)

    def __mul__(self, c: float) -> "DAMatrix":
        return DAMatrix(float(c) * self._data, self._beta)

    __rmul__ = __mul__

    def __neg__(self) -> "DAMatrix":
        return DAMatrix(-self._data, self._beta)

    def __repr__(self) -> str:
        return f"DAMatrix(n={self.n}, m={self.m}, beta={self.beta})"

    def allclose(self, other: "DAMatrix", atol: float = 1e-12) -> bool:
        return (self.beta == other.beta and self.shape == other.shape
                and bool(np.allclose(self._data, other._data, atol=atol, rtol=0)))


class HermitianPD(DAMatrix):
    """Hermitian positive definite matrix over the algebra.

    The full realified matrix is kept for computation; the
    ``m + m(m-1)beta/2`` functionally independent components are available
    through :attr:`coords`.

    Raises
    ------
    DomainError
        If the input is not Hermitian or not positive definite.
    """

    __slots__ = ()

    def __init__(self, data, beta: int, atol: float = 1e-10):
        arr = np.array(data, dtype=float)
        if beta == 1 and arr.ndim == 2:
            arr = arr[..., None]
        if arr.ndim == 0:
            arr = arr.reshape(1, 1, 1)
            if beta != 1:
                arr = np.concatenate([arr, np.zeros((1, 1, beta - 1))], axis=-1)
        if arr.ndim != 3 or arr.shape[0] != arr.shape[1]:
            raise ConfigurationError(f"Hermitian matrix must be square, got {arr.shape}")
        herm = conj_transpose(arr, beta)
        scale = max(1.0, float(np.max(np.abs(arr))))
        if np.max(np.abs(arr - herm)) > atol * scale:
            raise DomainError("matrix is not Hermitian", ["hermitian"])
        arr = 0.5 * (arr + herm)
        super().__init__(arr, beta)
        if not bool(is_pd_batch(arr, beta)):
            raise DomainError("matrix is not positive definite", ["pd"])

    @classmethod
    def from_coords(cls, coords, m: int, beta: int) -> "HermitianPD":
        return cls(herm_from_coords(coords, m, beta), beta)

    @classmethod
    def identity(cls, m: int, beta: int) -> "HermitianPD":
        return cls(eye(m, beta), beta)

    @property
    def coords(self) -> np.ndarray:
        """Independent components: diagonal, then strict upper triangle."""
        return herm_coords(self.data, self.beta)

    def __repr__(self) -> str:
        return f"HermitianPD(m={self.m}, beta={self.beta})"


def embed_complex(x: DAMatrix) -> np.ndarray:
    """Complex embedding of a matrix (``beta`` in 1, 2, 4)."""
    if x.beta == 8:
        raise UnsupportedAlgebraError("no complex embedding for octonions")
    return embed(x.data, x.beta)


def gram(x: DAMatrix) -> HermitianPD:
    """``X^H X`` for a full column rank matrix.

    Raises
    ------
    SingularityError
        If ``X`` is rank deficient (``n < m`` included).
    """
    if x.n < x.m:
        raise SingularityError(f"gram of a {x.n}x{x.m} matrix is singular")
    s = gram_batch(x.data, x.beta)
    lam = eigvalsh_batch(s, x.beta)
    if not lam[0] > 1e-14 * max(1.0, float(lam[-1])):
        raise SingularityError("matrix is rank deficient")
    return HermitianPD(s, x.beta)


def logdet(s: HermitianPD) -> float:
    """Log-determinant (Moore determinant for quaternions)."""
    if not isinstance(s, HermitianPD):
        s = HermitianPD(getattr(s, "data", s), getattr(s, "beta", 1))
    return float(logdet_batch(s.data, s.beta))


def trace_real(s: DAMatrix) -> float:
    """Trace of a Hermitian matrix."""
    return float(trace_real_batch(s.data))


def trace_gram(x: DAMatrix) -> float:
    """``tr X^H X`` without forming the product; never requires full rank."""
    return float(trace_gram_batch(x.data))


def sqrt_pd(s: HermitianPD) -> HermitianPD:
    """Hermitian square root."""
    return HermitianPD(sqrtm_batch(s.data, s.beta), s.beta)


def inv_pd(s: HermitianPD) -> HermitianPD:
    """Inverse of a Hermitian PD matrix."""
    return HermitianPD(invm_batch(s.data, s.beta), s.beta)
