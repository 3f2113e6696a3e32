"""
Closed-form log-Jacobians of matrix transformations and a numerical oracle.

All Jacobians are ``log |det d vec(Y) / d vec(X)|`` over realified
coordinates: ``beta n m`` reals for an ``n x m`` matrix, and the
``m + m(m-1) beta / 2`` independent components (real diagonal, strict upper
triangle) for Hermitian matrices.

=================  =============================  =====================================
transform          map                            log-Jacobian
=================  =============================  =====================================
``linear``         ``Y = A X B + C``              ``beta m/2 log|A^H A| + beta n/2 log|B^H B|``
``congruence``     ``Y = A S A^H``                ``(beta (m-1)/2 + 1) log|A^H A|``
``gram``           ``X -> (X^H X, H_1)``          ``-m log 2 + (beta(n-m+1)/2 - 1) log|S|``
``inverse``        ``Y = S^{-1}``                 ``(-beta (m-1) - 2) log|S|``
``stereo_matrix``  ``Y = X (I - X^H X)^{-1/2}``   ``-(beta (n+m-1)/2 + 1) log|I - X^H X|``
``stereo_trace``   ``Y = (1 - tr X^H X)^{-1/2} X`` ``-(beta n m/2 + 1) log(1 - tr X^H X)``
=================  =============================  =====================================

For ``gram`` the value is the density weight in
``(dX) = 2^{-m} |S|^{beta(n-m+1)/2-1} (dS) (H_1^H dH_1)``. The backward
stereographic maps ``X = Y (I + Y^H Y)^{-1/2}`` and
``X = (1 + tr Y^H Y)^{-1/2} Y`` carry the same exponents on
``|I + Y^H Y|`` and ``1 + tr Y^H Y``.

``Transform(kind="stereo_matrix", alt_exponent=True)`` switches to the
exponent ``-(beta (n+m+1)/2 + 1)``, which is kept only so that the
validation suite can show it failing the numerical oracle.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import expm

from . import algebra as alg
from .errors import ConfigurationError, DegenerateInputError, DomainError, SingularityError

__all__ = ["Transform", "TRANSFORM_KINDS", "log_jacobian", "apply_transform",
           "numeric_jacobian", "numeric_log_jacobian", "stereo_exponent",
           "gram_pushforward_logweight", "gram_chart_log_jacobian",
           "svd_logweight", "SVD_TAU"]

TRANSFORM_KINDS = ("linear", "congruence", "gram", "inverse",
                   "stereo_matrix", "stereo_trace")

#: exponent of pi in the singular value decomposition measure, per beta
SVD_TAU = {1: 0, 2: -1, 4: -2, 8: -4}

_SINGULAR_EPS = 1e-12


@dataclass(frozen=True)
class Transform:
    """A transformation with its parameters.

    Parameters
    ----------
    kind : str
        One of :data:`TRANSFORM_KINDS`.
    n, m : int
        Shape of the argument (``m`` is the order for Hermitian arguments).
    beta : int
        Real dimension of the algebra.
    A, B, C : ndarray, optional
        Realified parameter matrices for ``linear`` and ``congruence``.
    direction : {"forward", "backward"}
        Direction of the stereographic maps.
    alt_exponent : bool
        Use the alternative exponent for ``stereo_matrix``.
    """

    kind: str
    n: int
    m: int
    beta: int = 1
    A: np.ndarray | None = field(default=None, repr=False, compare=False)
    B: np.ndarray | None = field(default=None, repr=False, compare=False)
    C: np.ndarray | None = field(default=None, repr=False, compare=False)
    direction: str = "forward"
    alt_exponent: bool = False

    def __post_init__(self):
        if self.kind not in TRANSFORM_KINDS:
            raise ConfigurationError(f"unknown transform {self.kind!r}")
        if self.direction not in ("forward", "backward"):
            raise ConfigurationError("direction must be 'forward' or 'backward'")
        alg.check_beta(self.beta, self.m)
        if self.kind == "linear":
            a = _param(self.A, (self.n, self.n, self.beta), "A")
            b = _param(self.B, (self.m, self.m, self.beta), "B")
            c = self.C if self.C is None else _param(self.C, (self.n, self.m, self.beta), "C")
            object.__setattr__(self, "A", a)
            object.__setattr__(self, "B", b)
            object.__setattr__(self, "C", c)
        elif self.kind == "congruence":
            object.__setattr__(self, "A", _param(self.A, (self.m, self.m, self.beta), "A"))

    @property
    def hermitian_domain(self) -> bool:
        return self.kind in ("congruence", "inverse")


def _param(p, shape, name):
    if p is None:
        raise ConfigurationError(f"transform parameter {name} is required")
    p = np.asarray(getattr(p, "data", p), dtype=float)
    if p.shape != shape:
        raise ConfigurationError(f"parameter {name} must have shape {shape}, got {p.shape}")
    return p


def _data(x):
    return np.asarray(getattr(x, "data", x), dtype=float)


def stereo_exponent(beta: int, n: int, m: int, alt_exponent: bool = False) -> float:
    """Exponent on ``|I - X^H X|`` for ``Y = X (I - X^H X)^{-1/2}``."""
    if alt_exponent:
        return -(beta * (n + m + 1) / 2.0 + 1.0)
    return -(beta * (n + m - 1) / 2.0 + 1.0)


def _check_shape(t: Transform, x):
    expect = (t.m, t.m, t.beta) if t.hermitian_domain else (t.n, t.m, t.beta)
    if x.shape != expect:
        raise ConfigurationError(f"argument must have shape {expect}, got {x.shape}")


def _logdet_gram(a, beta):
    g = alg.gram_batch(a, beta)
    if not bool(alg.is_pd_batch(g, beta)):
        raise SingularityError("parameter matrix is singular")
    return float(alg.logdet_batch(g, beta))


def _logdet_pd(s, beta, what="S"):
    if not bool(alg.is_pd_batch(s, beta)):
        raise DomainError(f"{what} must be positive definite", ["pd"])
    return float(alg.logdet_batch(s, beta))


def log_jacobian(t: Transform, x) -> float:
    """Closed-form log-Jacobian of ``t`` at ``x``.

    Parameters
    ----------
    t : Transform
    x : DAMatrix, HermitianPD or ndarray
        Argument in realified form (the input of the map in the declared
        direction).

    Returns
    -------
    float

    Raises
    ------
    DomainError
        Outside the domain of the transform.
    SingularityError
        Within ``1e-12`` of the boundary, or singular parameters.

    Examples
    --------
    >>> x = np.array([[[0.6]]])
    >>> round(log_jacobian(Transform("stereo_trace", 1, 1), x), 6)
    0.669431
    """
    x = _data(x)
    _check_shape(t, x)
    b, n, m = t.beta, t.n, t.m
    if t.kind == "linear":
        return (b * m / 2.0 * _logdet_gram(t.A, b)
                + b * n / 2.0 * _logdet_gram(t.B, b))
    if t.kind == "congruence":
        return (b * (m - 1) / 2.0 + 1.0) * _logdet_gram(t.A, b)
    if t.kind == "inverse":
        return (-b * (m - 1) - 2.0) * _logdet_pd(x, b)
    if t.kind == "gram":
        s = alg.gram_batch(x, b)
        if not bool(alg.is_pd_batch(s, b)):
            raise SingularityError("X is rank deficient")
        return gram_pushforward_logweight(s, n, b)
    if t.kind == "stereo_trace":
        e = -(b * n * m / 2.0 + 1.0)
        tr = float(alg.trace_gram_batch(x))
        if t.direction == "backward":
            return e * np.log1p(tr)
        if tr >= 1.0:
            raise DomainError("stereo_trace needs tr X^H X < 1", ["trace_ball"])
        if 1.0 - tr < _SINGULAR_EPS:
            raise SingularityError("1 - tr X^H X is numerically zero")
        return e * np.log1p(-tr)
    # stereo_matrix
    e = stereo_exponent(b, n, m, t.alt_exponent)
    g = alg.gram_batch(x, b)
    eye = alg.eye(m, b)
    if t.direction == "backward":
        return e * float(alg.logdet_batch(eye + g, b))
    p = eye - g
    lam = alg.eigvalsh_batch(p, b)
    if not lam[0] > 0:
        raise DomainError("stereo_matrix needs I - X^H X positive definite",
                          ["I_minus_XhX_pd"])
    if lam[0] < _SINGULAR_EPS:
        raise SingularityError("I - X^H X is numerically singular")
    return e * float(alg.logdet_batch(p, b))


def apply_transform(t: Transform, x) -> np.ndarray:
    """Evaluate the map itself (realified output)."""
    x = _data(x)
    b = t.beta
    if t.kind == "linear":
        y = alg.mat_mul(alg.mat_mul(t.A, x, b), t.B, b)
        return y if t.C is None else y + t.C
    if t.kind == "congruence":
        return alg.mat_mul(alg.mat_mul(t.A, x, b), alg.conj_transpose(t.A, b), b)
    if t.kind == "inverse":
        return alg.invm_batch(x, b)
    if t.kind == "gram":
        return alg.gram_batch(x, b)
    if t.kind == "stereo_trace":
        tr = alg.trace_gram_batch(x)
        if t.direction == "forward":
            return x / np.sqrt(1.0 - tr)
        return x / np.sqrt(1.0 + tr)
    g = alg.gram_batch(x, b)
    eye = alg.eye(t.m, b)
    if t.direction == "forward":
        return alg.mat_mul(x, alg.invsqrtm_batch(eye - g, b), b)
    return alg.mat_mul(x, alg.invsqrtm_batch(eye + g, b), b)


# ---------------------------------------------------------------------------
# numerical oracle
# ---------------------------------------------------------------------------

def _jacobian_matrix(func, x0, h):
    d = x0.size
    jac = np.empty((func(x0).size, d))
    for i in range(d):
        e = np.zeros(d)
        e[i] = h
        jac[:, i] = (func(x0 + e) - func(x0 - e)) / (2.0 * h)
    return jac


def _logabsdet(jac):
    if jac.shape[0] != jac.shape[1]:
        raise ConfigurationError("numeric Jacobian is not square")
    sign, ld = np.linalg.slogdet(jac)
    if sign == 0 or not np.isfinite(ld):
        raise SingularityError("numeric Jacobian is singular")
    return ld


def numeric_jacobian(func, x0, h: float = 1e-5, digits: int = 4) -> float:
    """Central-difference log-Jacobian with Richardson extrapolation.

    Parameters
    ----------
    func : callable
        Map from a flat coordinate vector to a flat vector of equal length.
    x0 : array_like
        Base point (flat coordinates).
    h : float
        Step, within ``[1e-7, 1e-4]``.
    digits : int
        Required agreement of the estimates at ``h`` and ``h/2``.

    Returns
    -------
    float
        ``log |det J|`` from the extrapolated Jacobian ``(4 J_{h/2} - J_h) / 3``.

    Raises
    ------
    SingularityError
        If the Jacobian is singular or the two step sizes disagree.
    """
    if not 1e-7 <= h <= 1e-4:
        raise ConfigurationError("finite-difference step must lie in [1e-7, 1e-4]")
    x0 = np.asarray(x0, dtype=float).ravel()

    def f(v):
        return np.asarray(func(v), dtype=float).ravel()

    j1 = _jacobian_matrix(f, x0, h)
    j2 = _jacobian_matrix(f, x0, h / 2.0)
    l1, l2 = _logabsdet(j1), _logabsdet(j2)
    if abs(l1 - l2) > 10.0 ** (-digits) * max(1.0, abs(l2)):
        raise SingularityError(
            f"finite differences not converged ({l1:.8g} vs {l2:.8g})")
    return _logabsdet((4.0 * j2 - j1) / 3.0)


def numeric_log_jacobian(t: Transform, x, h: float = 1e-5) -> float:
    """Numerical counterpart of :func:`log_jacobian` for the same transform."""
    x = _data(x)
    _check_shape(t, x)
    if t.kind == "gram":
        return gram_chart_log_jacobian(x, t.beta, h=h)
    if t.hermitian_domain:
        m, b = t.m, t.beta

        def func(c):
            s = alg.herm_from_coords(c, m, b)
            return alg.herm_coords(apply_transform(t, s), b)
        return numeric_jacobian(func, alg.herm_coords(x, b), h)
    shape = x.shape

    def func(v):
        return apply_transform(t, v.reshape(shape)).ravel()
    return numeric_jacobian(func, x.ravel(), h)


# ---------------------------------------------------------------------------
# Gram and singular value weights
# ---------------------------------------------------------------------------

def gram_pushforward_logweight(s, n: int, beta: int | None = None) -> float:
    """``log[2^{-m} |S|^{beta(n-m+1)/2-1}]`` for ``S = X^H X``, ``X`` of size ``n x m``."""
    if beta is None:
        beta = getattr(s, "beta", 1)
    s = _data(s)
    m = s.shape[-2]
    if n < m:
        raise DomainError("gram weight needs n >= m")
    return -m * np.log(2.0) + (beta * (n - m + 1) / 2.0 - 1.0) * _logdet_pd(s, beta)


def _orthonormal_complement(h1, beta):
    """Columns completing ``h1`` to a unitary matrix (Gram-Schmidt over the algebra)."""
    n, m = h1.shape[:2]
    basis = [h1[:, j:j + 1] for j in range(m)]
    candidates = []
    for i in range(n):
        v = np.zeros((n, 1, beta))
        v[i, 0, 0] = 1.0
        candidates.append(v)
    while len(basis) < n:
        best, best_norm = None, -1.0
        for v in candidates:
            w = v.copy()
            for _ in range(2):
                for u in basis:
                    w = w - alg.mat_mul(u, alg.mat_mul(alg.conj_transpose(u, beta), w, beta), beta)
            nrm = np.sqrt(alg.trace_gram_batch(w))
            if nrm > best_norm:
                best, best_norm = w, nrm
        basis.append(best / best_norm)
    return np.concatenate(basis, axis=1)


def _skew_from_theta(theta, n, m, beta):
    k = np.zeros((n, n, beta))
    pos = 0
    for i in range(m):
        if beta > 1:
            k[i, i, 1:] = theta[pos:pos + beta - 1]
            pos += beta - 1
        for j in range(i + 1, n):
            k[j, i, :] = theta[pos:pos + beta]
            pos += beta
            k[i, j, 0] = -k[j, i, 0]
            k[i, j, 1:] = k[j, i, 1:]
    return k


def gram_chart_log_jacobian(x, beta: int, h: float = 1e-5) -> float:
    """Numerical log-Jacobian of ``(S, H_1) -> X = H_1 S^{1/2}`` at ``X``.

    The Stiefel factor is charted by ``H_1(theta) = (H exp K(theta))[:, :m]``
    where ``H`` completes ``H_1`` to a unitary matrix and ``K`` is
    skew-Hermitian; at ``theta = 0`` the chart coordinates are exactly the
    components ``h_j^H dh_i`` (``j > i``) and the imaginary parts of
    ``h_i^H dh_i`` that make up the invariant form ``(H_1^H dH_1)``.
    """
    x = _data(x)
    n, m = x.shape[:2]
    if beta == 8:
        raise ConfigurationError("gram chart is not available for octonions")
    s0 = alg.gram_batch(x, beta)
    h1 = alg.mat_mul(x, alg.invsqrtm_batch(s0, beta), beta)
    hfull = _orthonormal_complement(h1, beta)
    ns = alg.herm_dim(m, beta)
    nt = beta * n * m - ns

    def func(c):
        s = alg.herm_from_coords(c[:ns], m, beta)
        k = _skew_from_theta(c[ns:], n, m, beta)
        u = alg.unembed(expm(alg.embed(k, beta)), beta)
        h = alg.mat_mul(hfull, u, beta)[:, :m]
        return alg.mat_mul(h, alg.sqrtm_batch(s, beta), beta).ravel()

    c0 = np.concatenate([alg.herm_coords(s0, beta), np.zeros(nt)])
    return numeric_jacobian(func, c0, h)


def svd_logweight(d, n: int, m: int | None = None, beta: int = 1) -> float:
    """Log-weight of the singular value decomposition measure.

    ``2^{-m} pi^tau prod d_i^{beta(n-m+1)-1} prod_{i<j} (d_i^2 - d_j^2)^beta``
    with ``tau`` from :data:`SVD_TAU`.

    Raises
    ------
    DegenerateInputError
        Unless ``d_1 > ... > d_m > 0`` strictly.
    """
    d = np.asarray(d, dtype=float).ravel()
    if m is None:
        m = d.size
    if d.size != m or n < m:
        raise ConfigurationError("need m singular values and n >= m")
    if np.any(d <= 0) or np.any(np.diff(d) >= 0):
        raise DegenerateInputError("singular values must be distinct, positive and decreasing")
    beta = alg.check_beta(beta)
    iu, ju = np.triu_indices(m, 1)
    return float(-m * np.log(2.0) + SVD_TAU[beta] * np.log(np.pi)
                 + (beta * (n - m + 1) - 1.0) * np.sum(np.log(d))
                 + beta * np.sum(np.log(d[iu] ** 2 - d[ju] ** 2)))
