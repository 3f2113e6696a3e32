"""
Log-domain special functions on the cone of Hermitian PD matrices.

The multivariate gamma function over the algebra with real dimension
``beta`` is

.. math::

    \\Gamma_m^\\beta[a] = \\pi^{m(m-1)\\beta/4}
        \\prod_{i=1}^{m} \\Gamma[a - (i-1)\\beta/2],
    \\qquad a > (m-1)\\beta/2,

and the volume of the Stiefel manifold of ``n x m`` matrices with
orthonormal columns is

.. math::

    \\operatorname{Vol}(V_{m,n}^\\beta) =
        \\frac{2^m \\pi^{mn\\beta/2}}{\\Gamma_m^\\beta[n\\beta/2]}.

Only logarithms are exposed; likelihoods with shape parameters in the
hundreds overflow on the linear scale.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import gammaln

from .algebra import check_beta
from .errors import DomainError

__all__ = ["GammaArgs", "log_gamma", "log_mv_gamma", "log_stiefel_volume",
           "mv_gamma_pole"]

LOG_PI = np.log(np.pi)


@dataclass(frozen=True)
class GammaArgs:
    """Arguments of the multivariate gamma function."""

    beta: int
    m: int
    a: float

    def __post_init__(self):
        check_beta(self.beta)
        if int(self.m) != self.m or self.m < 1:
            raise DomainError(f"order m must be a positive integer (got {self.m})")


def log_gamma(a):
    """Scalar log-gamma for positive arguments (array friendly)."""
    a = np.asarray(a, dtype=float)
    if np.any(~(a > 0)):
        raise DomainError("log_gamma requires a > 0")
    out = gammaln(a)
    return float(out) if out.ndim == 0 else out


def mv_gamma_pole(beta: int, m: int) -> float:
    """Boundary ``(m-1) beta / 2`` below which the integral diverges."""
    return (m - 1) * beta / 2.0


def log_mv_gamma(beta, m=None, a=None):
    """Logarithm of the multivariate gamma function.

    Parameters
    ----------
    beta : int or GammaArgs
        Real dimension of the algebra, or a :class:`GammaArgs` bundle.
    m : int
        Matrix order.
    a : float or array_like
        Argument; must exceed ``(m - 1) beta / 2``.

    Returns
    -------
    float or ndarray

    Raises
    ------
    DomainError
        When ``a`` is at or below the pole boundary.

    Examples
    --------
    >>> round(log_mv_gamma(1, 2, 1.5), 7)
    0.4515827
    """
    if isinstance(beta, GammaArgs):
        beta, m, a = beta.beta, beta.m, beta.a
    beta = check_beta(beta)
    if int(m) != m or m < 1:
        raise DomainError(f"order m must be a positive integer (got {m})")
    m = int(m)
    a = np.asarray(a, dtype=float)
    pole = mv_gamma_pole(beta, m)
    if np.any(~(a > pole)):
        raise DomainError(
            f"multivariate gamma needs a > (m-1)beta/2 = {pole:g}")
    shifts = np.arange(m) * beta / 2.0
    out = m * (m - 1) * beta / 4.0 * LOG_PI + np.sum(
        gammaln(a[..., None] - shifts), axis=-1)
    return float(out) if out.ndim == 0 else out


def log_stiefel_volume(beta: int, m: int, n: int) -> float:
    """Log-volume of the Stiefel manifold ``V_{m,n}^beta``.

    Raises
    ------
    DomainError
        If ``n < m``.

    Examples
    --------
    >>> bool(np.isclose(log_stiefel_volume(1, 1, 2), np.log(2 * np.pi)))
    True
    """
    beta = check_beta(beta)
    if n < m or m < 1:
        raise DomainError(f"Stiefel manifold needs n >= m >= 1 (got n={n}, m={m})")
    return (m * np.log(2.0) + m * n * beta / 2.0 * LOG_PI
            - log_mv_gamma(beta, m, n * beta / 2.0))
