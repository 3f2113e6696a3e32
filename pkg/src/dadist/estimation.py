"""
Maximum likelihood for dependent-sample likelihoods.

A replicate is one joint observation ``(F_1, ..., F_k)`` of a kernel-free
family; the likelihood of a data set is the sum of the replicate
log-densities. Shape parameters are tied into groups (for instance
``a_1 = ... = a_k = a``) and each group is optimized through
``rho_g = log(a_g - pole_g)``, which keeps every iterate feasible.

Examples
--------
>>> import numpy as np
>>> from dadist.estimation import FitProblem, log_likelihood
>>> prob = FitProblem.from_arrays("beta2-marginal", 1, 1, np.array([[1.0]]))
>>> bool(np.isclose(log_likelihood(prob, [1.5, 0.5]), -np.log(2 * np.pi)))
True
"""
from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize
from scipy.special import gammaln

from .errors import ConfigurationError, DomainError
from .families import (FAMILIES, FamilyId, FamilyInstance, FamilyPoint, check_domain,
                       family_from_name, log_density)

__all__ = ["FitProblem", "FitResult", "log_likelihood", "fit", "profile",
           "parse_tie", "tied_beta2_loglik"]

RHO_BOUND = 25.0


def parse_tie(tie, k: int) -> tuple:
    """Parse a tying spec into a partition of ``0..k``.

    Accepted forms: ``"a1..ak"`` (``a_0`` free, ``a_1..a_k`` shared),
    ``"free"``, ``"all"``, or explicit groups such as ``"0|1,2|3"``.
    Sequences of index groups are passed through after validation.
    """
    if tie is None or (isinstance(tie, str) and tie.strip() in ("a1..ak", "tied", "")):
        groups = ((0,), tuple(range(1, k + 1))) if k >= 1 else ((0,),)
    elif isinstance(tie, str) and tie.strip() == "free":
        groups = tuple((i,) for i in range(k + 1))
    elif isinstance(tie, str) and tie.strip() == "all":
        groups = (tuple(range(k + 1)),)
    elif isinstance(tie, str):
        try:
            groups = tuple(tuple(int(t) for t in g.split(",") if t.strip())
                           for g in tie.split("|"))
        except ValueError:
            raise ConfigurationError(f"cannot parse tie spec {tie!r}") from None
    else:
        groups = tuple(tuple(int(i) for i in g) for g in tie)
    flat = sorted(i for g in groups for i in g)
    if flat != list(range(k + 1)) or any(len(g) == 0 for g in groups):
        raise ConfigurationError(f"tie spec must partition 0..{k}, got {groups}")
    return groups


@dataclass
class FitProblem:
    """Data and model for a fit.

    Parameters
    ----------
    family : FamilyId or str
        A kernel-free family.
    beta, m : int
    data : list of FamilyPoint
        Replicates; each is an unbatched point (or a batched point whose
        entries are replicates).
    tie : str or sequence, optional
        See :func:`parse_tie`; defaults to ``a1..ak``.
    r : int
        Inverted slots for the inverse beta type I families.
    """

    family: FamilyId
    beta: int
    m: int
    data: list
    tie: object = None
    r: int = 0
    groups: tuple = field(init=False)
    k: int = field(init=False)
    fixed: dict = field(init=False, repr=False)
    _stacked: FamilyPoint = field(init=False, repr=False)

    def __post_init__(self):
        self.family = family_from_name(self.family)
        spec = FAMILIES[self.family]
        if spec.kernel:
            raise ConfigurationError(
                f"{self.family} depends on a kernel; fits use kernel-free families")
        pts = [self.data] if isinstance(self.data, FamilyPoint) else list(self.data)
        if not pts:
            raise ConfigurationError("a fit needs at least one replicate")
        nslots = {len(p.slots) for p in pts}
        if len(nslots) != 1:
            raise ConfigurationError("all replicates must have the same arity")
        try:
            stacked = tuple(np.concatenate([p.slots[j] for p in pts])
                            for j in range(nslots.pop()))
        except ValueError:
            raise ConfigurationError("replicates have inconsistent dimensions") from None
        self._stacked = FamilyPoint(stacked, batched=True)
        self.k = len(stacked) if not spec.all_slots else len(stacked) - 1
        # rectangular arguments pin a_i = n_i / 2; only a_0 is estimated then
        self.fixed = {}
        if spec.arg == "rect":
            self.fixed = {i: stacked[i - 1].shape[1] / 2.0 for i in range(1, self.k + 1)}
            if self.tie not in (None, "a0"):
                raise ConfigurationError(
                    "rectangular arguments fix a_1..a_k; only a_0 can be fitted")
            self.groups = ((0,),)
        else:
            self.groups = parse_tie(self.tie, self.k)
        probe = self.instance(self._feasible_guess())
        bad = check_domain(probe, self._stacked)
        if bad:
            raise DomainError(f"data violate {', '.join(bad)}", bad)

    # construction helpers --------------------------------------------------
    @classmethod
    def from_arrays(cls, family, beta, m, values, tie=None, r=0) -> "FitProblem":
        """Build from an array of shape ``(replicates, k)`` of scalar arguments
        (``m = 1`` Hermitian slots) or ``(replicates, k, m, m, beta)``."""
        values = np.asarray(values, dtype=float)
        if values.ndim == 1:
            values = values[None, :]
        reps, k = values.shape[:2]
        if values.ndim == 2:
            slots = []
            for i in range(k):
                s = np.zeros((reps, m, m, beta))
                s[:, 0, 0, 0] = values[:, i]
                slots.append(s)
        else:
            slots = [values[:, i] for i in range(k)]
        return cls(family, beta, m, [FamilyPoint(tuple(slots), batched=True)], tie=tie, r=r)

    @property
    def replicates(self) -> int:
        return self._stacked.size

    @property
    def stacked(self) -> FamilyPoint:
        return self._stacked

    def group_labels(self) -> list:
        labels = []
        for g in self.groups:
            if g == (0,):
                labels.append("a0")
            elif len(g) == self.k and 0 not in g and self.k > 1:
                labels.append("a")
            else:
                labels.append("=".join(f"a{i}" for i in g))
        return labels

    def expand(self, params) -> np.ndarray:
        """Full ``a_0..a_k`` vector from per-group values."""
        params = np.atleast_1d(np.asarray(params, dtype=float))
        if params.shape != (len(self.groups),):
            raise ConfigurationError(
                f"expected {len(self.groups)} parameters ({', '.join(self.group_labels())})")
        a = np.empty(self.k + 1)
        for i, val in self.fixed.items():
            a[i] = val
        for g, val in zip(self.groups, params):
            a[list(g)] = val
        return a

    def poles(self) -> np.ndarray:
        """Per-group lower bounds."""
        inst = self.instance(self._feasible_guess())
        return np.array([max(inst.pole(i) for i in g) for g in self.groups])

    def _feasible_guess(self):
        return np.full(len(self.groups), (self.m + 1) / 2.0 + 1.0)

    def instance(self, params) -> FamilyInstance:
        a = self.expand(params)
        return FamilyInstance(self.family, self.beta, self.m, tuple(a), r=self.r)


@dataclass
class FitResult:
    """Outcome of :func:`fit`.

    Attributes
    ----------
    estimates : dict
        Group label -> estimate.
    params : ndarray
        Per-group estimates in group order.
    loglik : float
    converged : bool
    trace : list of dict
        One entry per start: start point, end point, log-likelihood,
        iterations, success flag.
    stderr : dict or None
        Delta-method standard errors (when the Hessian is negative definite).
    """

    estimates: dict
    params: np.ndarray
    loglik: float
    converged: bool
    trace: list
    stderr: dict | None = None
    best_restart: int = -1

    def to_dict(self) -> dict:
        return {"estimates": self.estimates, "loglik": self.loglik,
                "converged": self.converged, "stderr": self.stderr,
                "best_restart": self.best_restart, "trace": self.trace}


def log_likelihood(problem: FitProblem, params) -> float:
    """Sum of replicate log-densities with tied parameters expanded.

    Raises
    ------
    DomainError
        If ``params`` lie outside the open feasible region.
    """
    try:
        inst = problem.instance(params)
    except ConfigurationError as exc:
        raise DomainError(str(exc), ["pole"]) from None
    return float(np.sum(log_density(inst, problem.stacked, check=False)))


def tied_beta2_loglik(F, a0: float, a: float, beta: int) -> float:
    """Closed-form log-likelihood of scalar beta type II collections with
    ``a_1 = ... = a_k = a`` at ``m = 1``.

    Parameters
    ----------
    F : array_like, shape (replicates, k)
    """
    F = np.atleast_2d(np.asarray(F, dtype=float))
    k = F.shape[1]
    const = gammaln((a0 + k * a) * beta) - gammaln(a0 * beta) - k * gammaln(beta * a)
    per = (const + (beta * a - 1.0) * np.sum(np.log(F), axis=1)
           - (a0 + k * a) * beta * np.log1p(np.sum(F, axis=1)))
    return float(np.sum(per))


def _starts(n_groups: int, restarts: int, seed: int) -> np.ndarray:
    rng = np.random.default_rng([int(seed), 20])
    # log-uniform offsets over [0.01, 100] above the pole
    return rng.uniform(np.log(0.01), np.log(100.0), size=(restarts, n_groups))


def _hessian(func, x, h=1e-4):
    d = len(x)
    hess = np.empty((d, d))
    for i in range(d):
        for j in range(i, d):
            ei = np.zeros(d)
            ej = np.zeros(d)
            ei[i] = h
            ej[j] = h
            val = (func(x + ei + ej) - func(x + ei - ej) - func(x - ei + ej)
                   + func(x - ei - ej)) / (4.0 * h * h)
            hess[i, j] = hess[j, i] = val
    return hess


def fit(problem: FitProblem, restarts: int = 16, max_iter: int = 4000, tol: float = 1e-8,
        seed: int = 0, threads: int = 1, stderr: bool = True,
        space: str = "rho") -> FitResult:
    """Multi-start Nelder-Mead maximum likelihood.

    Parameters
    ----------
    problem : FitProblem
    restarts : int
        Deterministic starts, log-uniform in ``a - pole`` over ``[0.01, 100]``.
    max_iter : int
    tol : float
        Simplex size tolerance in the optimization coordinates; the
        log-likelihood tolerance is ``1e-9``.
    seed : int
        Seeds the start points.
    threads : int
        Restarts run concurrently; the result is the argmax over starts with
        ties going to the lowest index.
    stderr : bool
        Compute standard errors from a central-difference Hessian.
    space : {"rho", "a"}
        Optimize ``log(a - pole)`` (default) or ``a`` itself with box
        constraints.

    Returns
    -------
    FitResult
        ``converged`` is false when no start converged; no exception is
        raised in that case.
    """
    if restarts < 1:
        raise ConfigurationError("restarts must be positive")
    poles = problem.poles()
    starts = _starts(len(poles), restarts, seed)

    def ll_rho(rho):
        if not np.all(np.isfinite(rho)) or np.any(np.abs(rho) > RHO_BOUND):
            return -np.inf
        try:
            val = log_likelihood(problem, poles + np.exp(rho))
        except DomainError:
            return -np.inf
        return val if np.isfinite(val) else -np.inf

    def neg_rho(rho):
        val = ll_rho(rho)
        return -val if np.isfinite(val) else np.inf

    def neg_a(a):
        return neg_rho(np.log(np.maximum(a - poles, 1e-300)))

    opts = {"xatol": tol, "fatol": 1e-9, "maxiter": max_iter, "maxfev": 4 * max_iter}

    def run(i):
        x0 = starts[i]
        if space == "a":
            lo = poles + np.exp(-RHO_BOUND)
            hi = poles + np.exp(RHO_BOUND)
            res = minimize(neg_a, poles + np.exp(x0), method="Nelder-Mead",
                           bounds=list(zip(lo, hi)), options=opts)
            # one restart at the optimum to shake off simplex collapse
            res = minimize(neg_a, res.x, method="Nelder-Mead", bounds=list(zip(lo, hi)),
                           options=opts)
            est = res.x
        else:
            res = minimize(neg_rho, x0, method="Nelder-Mead", options=opts)
            res = minimize(neg_rho, res.x, method="Nelder-Mead", options=opts)
            est = poles + np.exp(res.x)
        ll = -float(res.fun) if np.isfinite(res.fun) else -np.inf
        return {"restart": i, "start": (poles + np.exp(x0)).tolist(), "end": est.tolist(),
                "loglik": ll, "iterations": int(res.nit), "success": bool(res.success)}

    if threads > 1:
        with ThreadPoolExecutor(max_workers=int(threads)) as pool:
            trace = list(pool.map(run, range(restarts)))
    else:
        trace = [run(i) for i in range(restarts)]

    finite = [t for t in trace if np.isfinite(t["loglik"])]
    labels = problem.group_labels()
    if not finite:
        return FitResult({lab: float("nan") for lab in labels}, np.full(len(poles), np.nan),
                         -np.inf, False, trace)
    best = max(finite, key=lambda t: (t["loglik"], -t["restart"]))
    params = np.asarray(best["end"])
    converged = bool(best["success"])
    se = None
    if stderr:
        rho = np.log(params - poles)
        hess = _hessian(ll_rho, rho)
        if np.all(np.isfinite(hess)) and np.all(np.linalg.eigvalsh(hess) < 0):
            cov = np.linalg.inv(-hess)
            se_a = (params - poles) * np.sqrt(np.diag(cov))
            se = {lab: float(s) for lab, s in zip(labels, se_a)}
    return FitResult({lab: float(v) for lab, v in zip(labels, params)}, params,
                     float(best["loglik"]), converged, trace, se, int(best["restart"]))


def profile(problem: FitProblem, params, group, grid) -> list:
    """Log-likelihood along ``grid`` for one group, the others held at ``params``.

    ``group`` is an index or a label from :meth:`FitProblem.group_labels`.
    Infeasible grid values give ``-inf``.
    """
    labels = problem.group_labels()
    if isinstance(group, str):
        if group not in labels:
            raise ConfigurationError(f"unknown group {group!r}; groups: {', '.join(labels)}")
        group = labels.index(group)
    params = np.array(params, dtype=float)
    out = []
    for value in np.asarray(grid, dtype=float):
        p = params.copy()
        p[group] = value
        try:
            ll = log_likelihood(problem, p)
        except DomainError:
            ll = -np.inf
        out.append((float(value), float(ll)))
    return out
