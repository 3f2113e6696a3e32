"""
Numerical checks of densities against their samplers.

Every family is pulled back to an unconstrained space ``R^D`` by smooth
bijections with closed-form Jacobians:

* positive scalars: ``x = exp(y)``;
* Hermitian PD slots: ``X = exp(Y)`` (spectral), with the divided
  difference Jacobian ``prod f'(l_i) prod_{i<j} |(f(l_i) - f(l_j)) / (l_i - l_j)|^beta``;
* ``0 < B < I``: spectral logistic map; ``A > I``: ``A = I + exp(Y)``;
* ``B > 0`` with ``tr B < 1``: ``B = S / (1 + tr S)`` with ``S = exp(Y)``;
* rectangular slots: radial ``sinh`` map (free) or ``tanh`` map (unit
  trace ball); the matrix ball ``R^H R < I`` composes the ``sinh`` map with
  ``R = T (I + T^H T)^{-1/2}``.

Integrals of ``exp(log_density)`` are then estimated by importance
sampling from a multivariate-t mixture fitted to sampler draws, or by
adaptive cubature when ``D`` is small.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import stats
from scipy.integrate import cubature
from scipy.special import gammaln, logsumexp

from . import algebra as alg
from .errors import ConfigurationError
from .families import FAMILIES, FamilyId, FamilyInstance, FamilyPoint, log_density
from .kernels import RadialTable
from .sampling import sample

__all__ = ["slot_maps", "unconstrained_dim", "to_unconstrained", "from_unconstrained",
           "log_density_unconstrained", "NormalizationResult", "normalization_mc",
           "normalization_quad", "ScalarLaw", "slot_statistic_law", "slot_statistic",
           "ks_test"]

F = FamilyId
_BOUNDARY = 1e10


# ---------------------------------------------------------------------------
# slot maps
# ---------------------------------------------------------------------------

def _spectral_logjac(lam, f, fprime, beta):
    """Log-Jacobian of ``Y -> f(Y)`` from the eigenvalues of ``Y``."""
    out = np.sum(np.log(fprime(lam)), axis=-1)
    m = lam.shape[-1]
    for i in range(m):
        for j in range(i + 1, m):
            d = lam[..., i] - lam[..., j]
            close = np.abs(d) < 1e-8 * np.maximum(1.0, np.abs(lam[..., i]))
            safe = np.where(close, 1.0, d)
            dd = np.where(close, fprime(0.5 * (lam[..., i] + lam[..., j])),
                          (f(lam[..., i]) - f(lam[..., j])) / safe)
            out = out + beta * np.log(np.abs(dd))
    return out


def _exp(x):
    return np.exp(x)


def _logistic(x):
    return 0.5 * (1.0 + np.tanh(0.5 * x))


def _logistic_prime(x):
    p = _logistic(x)
    return p * (1.0 - p)


def _one_plus_exp(x):
    return 1.0 + np.exp(x)


def _radial_forward(y, kind):
    """Radial map of flattened vectors; returns the image and log-Jacobian."""
    d = y.shape[-1]
    rho = np.linalg.norm(y, axis=-1)
    small = rho < 1e-12
    safe = np.where(small, 1.0, rho)
    if kind == "sinh":
        g = np.sinh(safe)
        lj = np.log(np.cosh(rho)) + (d - 1) * np.where(small, 0.0, np.log(g / safe))
    else:
        g = np.tanh(safe)
        lj = -2.0 * np.log(np.cosh(rho)) + (d - 1) * np.where(small, 0.0, np.log(g / safe))
    scale = np.where(small, 1.0, g / safe)
    return y * scale[..., None], lj


def _radial_inverse(x, kind):
    rho = np.linalg.norm(x, axis=-1)
    small = rho < 1e-12
    safe = np.where(small, 1.0, rho)
    r = np.arcsinh(safe) if kind == "sinh" else np.arctanh(safe)
    return x * np.where(small, 1.0, r / safe)[..., None]


@dataclass(frozen=True)
class _SlotMap:
    kind: str          # scalar, herm, rect
    constraint: str    # pd, trace_lt_one, I_minus_B_pd, inverse_trace, A_minus_I_pd,
                       # free, trace_ball, matric_ball
    shape: tuple

    @property
    def dim(self) -> int:
        if self.kind == "scalar":
            return 1
        if self.kind == "herm":
            return alg.herm_dim(self.shape[0], self.shape[2])
        return int(np.prod(self.shape))


def slot_maps(inst: FamilyInstance) -> list:
    """Unconstraining map descriptors for each argument slot."""
    fam = inst.family
    spec = inst.spec
    kinds = inst.slot_kinds()
    maps = []
    for j, kind in enumerate(kinds):
        shape = inst.slot_shape(j)
        head = j == 0 and spec.head is not None and not spec.all_slots
        if kind == "scalar":
            cons = "pd"
        elif kind == "herm":
            cons = "pd"
            if not head:
                if fam in (F.TRI_GAMMA_B2_B1, F.TRI_WISHART_B2_B1):
                    if j == 2:
                        cons = "trace_lt_one" if spec.form == "trace" else "I_minus_B_pd"
                elif fam in (F.INVERSE_BETA1_MIXED, F.INVERSE_BETA1_MATRIC):
                    inv = j < inst.r
                    if spec.form == "trace":
                        cons = "inverse_trace" if inv else "trace_lt_one"
                    else:
                        cons = "A_minus_I_pd" if inv else "I_minus_B_pd"
                elif spec.ball == "herm_trace":
                    cons = "trace_lt_one"
                elif spec.ball == "herm_matric":
                    cons = "I_minus_B_pd"
        else:
            cons = "free"
            if fam in (F.TRI_GAMMA_P7_P2, F.TRI_WISHART_P7_P2):
                if j == 2:
                    cons = "trace_ball" if spec.form == "trace" else "matric_ball"
            elif spec.ball == "rect_trace":
                cons = "trace_ball"
            elif spec.ball == "rect_matric":
                cons = "matric_ball"
        maps.append(_SlotMap(kind, cons, shape))
    return maps


def unconstrained_dim(inst: FamilyInstance) -> int:
    """Total dimension ``D`` of the unconstrained space."""
    return sum(sm.dim for sm in slot_maps(inst))


def _herm_forward(sm, y):
    m, _, beta = sm.shape
    Y = alg.herm_from_coords(y, m, beta)
    lam = alg.eigh_spectrum(Y, beta)
    c = sm.constraint
    if c == "I_minus_B_pd":
        return (alg.funcm_batch(Y, beta, _logistic),
                _spectral_logjac(lam, _logistic, _logistic_prime, beta))
    if c == "A_minus_I_pd":
        return (alg.funcm_batch(Y, beta, _one_plus_exp),
                _spectral_logjac(lam, _one_plus_exp, _exp, beta))
    S = alg.funcm_batch(Y, beta, _exp)
    lj = _spectral_logjac(lam, _exp, _exp, beta)
    if c == "pd":
        return S, lj
    d = sm.dim
    t = alg.trace_real_batch(S)
    B = S / (1.0 + t)[..., None, None, None]
    lj = lj - (d + 1) * np.log1p(t)
    if c == "trace_lt_one":
        return B, lj
    # inverse_trace: A = B^{-1}
    lj = lj - (beta * (m - 1) + 2.0) * alg.logdet_batch(B, beta)
    return alg.invm_batch(B, beta), lj


def _herm_inverse(sm, x):
    m, _, beta = sm.shape
    c = sm.constraint
    if c == "I_minus_B_pd":
        Y = alg.funcm_batch(x, beta, lambda p: np.log(p) - np.log1p(-p))
    elif c == "A_minus_I_pd":
        Y = alg.funcm_batch(x, beta, lambda p: np.log(p - 1.0))
    else:
        if c == "inverse_trace":
            x = alg.invm_batch(x, beta)
        if c in ("trace_lt_one", "inverse_trace"):
            x = x / (1.0 - alg.trace_real_batch(x))[..., None, None, None]
        Y = alg.funcm_batch(x, beta, np.log)
    return alg.herm_coords(Y, beta)


def _rect_forward(sm, y):
    n, m, beta = sm.shape
    size = y.shape[0]
    if sm.constraint == "trace_ball":
        x, lj = _radial_forward(y, "tanh")
        # points this close to the boundary carry negligible mass but lose
        # all precision in 1 - tr R^H R
        lj = np.where(np.cosh(np.linalg.norm(y, axis=-1)) ** 2 < _BOUNDARY, lj, -np.inf)
        return x.reshape((size,) + sm.shape), lj
    x, lj = _radial_forward(y, "sinh")
    x = x.reshape((size,) + sm.shape)
    if sm.constraint == "free":
        return x, lj
    eye = alg.eye(m, beta)
    q = eye + alg.gram_batch(x, beta)
    r = alg.mat_mul(x, alg.invsqrtm_batch(q, beta), beta)
    # I - R^H R = (I + T^H T)^{-1}
    lj = lj - (beta * (n + m - 1) / 2.0 + 1.0) * alg.logdet_batch(q, beta)
    lj = np.where(alg.eigh_spectrum(q, beta)[..., -1] < _BOUNDARY, lj, -np.inf)
    return r, lj


def _rect_inverse(sm, x):
    n, m, beta = sm.shape
    size = x.shape[0]
    if sm.constraint == "trace_ball":
        return _radial_inverse(x.reshape(size, -1), "tanh")
    if sm.constraint == "matric_ball":
        eye = alg.eye(m, beta)
        x = alg.mat_mul(x, alg.invsqrtm_batch(eye - alg.gram_batch(x, beta), beta), beta)
    return _radial_inverse(x.reshape(size, -1), "sinh")


def from_unconstrained(inst: FamilyInstance, y) -> tuple:
    """Map ``y`` of shape ``(size, D)`` to a batched point and ``log|dx/dy|``."""
    y = np.atleast_2d(np.asarray(y, dtype=float))
    slots, lj, pos = [], 0.0, 0
    for sm in slot_maps(inst):
        part = y[:, pos:pos + sm.dim]
        pos += sm.dim
        if sm.kind == "scalar":
            slots.append(np.exp(part[:, 0]))
            lj = lj + part[:, 0]
        elif sm.kind == "herm":
            x, l = _herm_forward(sm, part)
            slots.append(x)
            lj = lj + l
        else:
            x, l = _rect_forward(sm, part)
            slots.append(x)
            lj = lj + l
    if pos != y.shape[1]:
        raise ConfigurationError(f"expected {pos} unconstrained coordinates, got {y.shape[1]}")
    return FamilyPoint(tuple(slots), batched=True, names=tuple(inst.slot_names())), lj


def to_unconstrained(inst: FamilyInstance, pt: FamilyPoint) -> np.ndarray:
    """Inverse of :func:`from_unconstrained` (log-Jacobian not returned)."""
    parts = []
    for sm, s in zip(slot_maps(inst), pt.slots):
        if sm.kind == "scalar":
            parts.append(np.log(s)[:, None])
        elif sm.kind == "herm":
            parts.append(_herm_inverse(sm, s))
        else:
            parts.append(_rect_inverse(sm, s))
    return np.concatenate(parts, axis=1)


def log_density_unconstrained(inst: FamilyInstance, y) -> np.ndarray:
    """Log-density of the pulled-back law on ``R^D``; ``-inf`` off the domain."""
    with np.errstate(all="ignore"):
        pt, lj = from_unconstrained(inst, y)
        out = log_density(inst, pt, check=False) + lj
    return np.where(np.isfinite(out), out, -np.inf)


# ---------------------------------------------------------------------------
# normalization
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class NormalizationResult:
    """Estimate of the total mass of a density.

    ``error`` is the Monte Carlo standard error or the cubature error
    estimate.
    """

    estimate: float
    error: float
    method: str
    dim: int
    draws: int = 0

    def within(self, tol: float) -> bool:
        return abs(self.estimate - 1.0) < tol


class _Proposal:
    """Mixture of a fitted and a widened multivariate t."""

    def __init__(self, y, df=5.0, wide=0.2, inflate=4.0):
        mu = np.mean(y, axis=0)
        cov = np.atleast_2d(np.cov(y, rowvar=False))
        cov = cov + 1e-9 * np.trace(cov) / len(mu) * np.eye(len(mu))
        shape = cov * (df - 2.0) / df
        self.parts = [stats.multivariate_t(mu, shape, df=df),
                      stats.multivariate_t(mu, inflate * shape, df=3.0)]
        self.logw = np.log([1.0 - wide, wide])

    def rvs(self, size, rng):
        counts = rng.multinomial(size, np.exp(self.logw))
        draws = [np.atleast_2d(p.rvs(size=c, random_state=rng)).reshape(c, -1)
                 for p, c in zip(self.parts, counts) if c]
        out = np.concatenate(draws)
        return out[rng.permutation(size)]

    def logpdf(self, y):
        comp = [lw + np.atleast_1d(p.logpdf(y)) for lw, p in zip(self.logw, self.parts)]
        return logsumexp(np.stack(comp), axis=0)


def normalization_mc(inst: FamilyInstance, draws: int = 10 ** 6, fit_draws: int = 20000,
                     seed: int = 0, chunk: int = 200000) -> NormalizationResult:
    """Importance-sampling estimate of the integral of ``exp(log_density)``.

    The proposal lives in the unconstrained space and is fitted to
    ``fit_draws`` constructive samples, so a sampler that disagreed with
    the density would show up as a poor (high variance) estimate rather
    than a biased one; the mass itself checks constants and exponents.
    """
    y_fit = to_unconstrained(inst, sample(inst, fit_draws, seed=seed))
    y_fit = y_fit[np.all(np.isfinite(y_fit), axis=1)]
    prop = _Proposal(y_fit)
    rng = np.random.default_rng([seed, 1])
    total, total_sq, done = 0.0, 0.0, 0
    while done < draws:
        c = min(chunk, draws - done)
        y = prop.rvs(c, rng)
        w = np.exp(log_density_unconstrained(inst, y) - prop.logpdf(y))
        total += np.sum(w)
        total_sq += np.sum(w * w)
        done += c
    mean = total / done
    var = max(total_sq / done - mean * mean, 0.0)
    return NormalizationResult(float(mean), float(np.sqrt(var / done)), "importance",
                               y_fit.shape[1], done)


def normalization_quad(inst: FamilyInstance, rtol: float = 1e-8, atol: float = 1e-10,
                       seed: int = 0, box: float = 40.0) -> NormalizationResult:
    """Adaptive cubature of the density over the unconstrained space.

    Coordinates are centred and whitened with a sampler-based estimate,
    then integrated over the cube ``[-box, box]^D``. Densities in the
    unconstrained coordinates have exponentially decaying tails, so the
    truncated mass is far below the cubature tolerance; the infinite-range
    transform is avoided because it costs orders of magnitude more
    evaluations.
    """
    d = unconstrained_dim(inst)
    if d > 3:
        raise ConfigurationError(f"cubature is limited to dimension 3 (got {d})")
    y_fit = to_unconstrained(inst, sample(inst, 4000, seed=seed))
    mu = np.mean(y_fit, axis=0)
    chol = np.linalg.cholesky(np.atleast_2d(np.cov(y_fit, rowvar=False)) + 1e-12 * np.eye(d))
    logdet = float(np.sum(np.log(np.diag(chol))))

    def integrand(z):
        y = mu + z @ chol.T
        return np.exp(log_density_unconstrained(inst, y) + logdet)

    res = cubature(integrand, np.full(d, -box), np.full(d, box), rtol=rtol, atol=atol,
                   max_subdivisions=20000)
    return NormalizationResult(float(res.estimate), float(res.error), "cubature", d)


# ---------------------------------------------------------------------------
# one-dimensional laws for KS tests
# ---------------------------------------------------------------------------

class ScalarLaw:
    """Tabulated law of a positive scalar statistic from a log-density.

    Parameters
    ----------
    logpdf : callable
        Vectorized log-density of the statistic ``s``.
    support : str
        ``"positive"`` (``s > 0``), ``"unit"`` (``0 < s < 1``) or
        ``"above_one"`` (``s > 1``); fixes the unconstraining variable.
    """

    def __init__(self, logpdf, support: str = "positive"):
        self.support = support
        self._logpdf = logpdf
        self.table = RadialTable(self._logpdf_y)

    def _from_y(self, y):
        if self.support == "unit":
            s = 0.5 * (1.0 + np.tanh(0.5 * y))
            with np.errstate(divide="ignore"):
                return s, np.log(s) + np.log1p(-s)
        if self.support == "above_one":
            return 1.0 + np.exp(y), y
        return np.exp(y), y

    def _to_y(self, s):
        s = np.asarray(s, dtype=float)
        with np.errstate(divide="ignore"):
            if self.support == "unit":
                return np.log(s) - np.log1p(-s)
            if self.support == "above_one":
                return np.log(s - 1.0)
            return np.log(s)

    def _logpdf_y(self, y):
        y = np.asarray(y, dtype=float)
        s, lj = self._from_y(y.ravel())
        with np.errstate(all="ignore"):
            out = (self._logpdf(s) + lj).reshape(y.shape)
        return np.where(np.isfinite(out), out, -np.inf)

    @property
    def mass(self) -> float:
        """Integral of the supplied density (should be 1)."""
        return float(self.table.total)

    def cdf(self, s):
        return self.table.cdf_y(self._to_y(s))


def slot_statistic(inst: FamilyInstance, pt: FamilyPoint, slot: int = 0) -> np.ndarray:
    """Scalar summary of a slot: the value for 1x1 Hermitian or scalar slots,
    the squared norm for rectangular ones."""
    kind = inst.slot_kinds()[slot]
    s = pt.slots[slot]
    if kind == "scalar":
        return s
    if kind == "herm":
        if inst.m != 1:
            raise ConfigurationError("slot statistics need m = 1 for Hermitian slots")
        return s[:, 0, 0, 0]
    return alg.trace_gram_batch(s)


def slot_statistic_law(inst: FamilyInstance) -> ScalarLaw:
    """Law of :func:`slot_statistic` for single-slot families at ``m = 1``.

    Built only from :func:`log_density`: rectangular slots with a density
    depending on the squared norm ``s`` pick up the polar factor
    ``pi^{d/2} s^{d/2-1} / Gamma(d/2)``.
    """
    kinds = inst.slot_kinds()
    if len(kinds) != 1 or inst.m != 1:
        raise ConfigurationError("slot statistic laws need a single slot and m = 1")
    sm = slot_maps(inst)[0]
    shape = inst.slot_shape(0)
    if kinds[0] == "herm":
        def logpdf(s):
            x = np.zeros((len(s),) + shape)
            x[:, 0, 0, 0] = s
            return log_density(inst, FamilyPoint((x,), batched=True), check=False)
        support = {"pd": "positive", "trace_lt_one": "unit", "I_minus_B_pd": "unit",
                   "inverse_trace": "above_one", "A_minus_I_pd": "above_one"}[sm.constraint]
        return ScalarLaw(logpdf, support)
    d = int(np.prod(shape))

    def logpdf(s):
        x = np.zeros((len(s),) + shape)
        x[:, 0, 0, 0] = np.sqrt(s)
        polar = d / 2.0 * np.log(np.pi) - gammaln(d / 2.0) + (d / 2.0 - 1.0) * np.log(s)
        return log_density(inst, FamilyPoint((x,), batched=True), check=False) + polar
    return ScalarLaw(logpdf, "positive" if sm.constraint == "free" else "unit")


def ks_test(values, law) -> float:
    """KS p-value of ``values`` against a :class:`ScalarLaw` or scipy law."""
    cdf = law.cdf
    return float(stats.kstest(np.asarray(values, dtype=float), cdf).pvalue)
