"""
Log-densities of the multimatrix (trace based) and multimatricvariate
(determinant based) distribution families.

Notation
--------
Every instance carries extended shape parameters ``a_0, ..., a_k`` with
``a_i = n_i / 2`` for integer row counts. Write ``beta`` for the algebra
dimension, ``m`` for the column count, ``A = sum_i a_i``,
``c_i = a_i m beta`` (half the realified dimension of block ``i``) and
``H = A m beta``. Kernel-dependent families evaluate the generator ``h`` in
the total realified dimension ``N = 2H``.

Every family is the pushforward of a spherical source law
``h(beta sum_i tr X_i^H X_i)`` on blocks ``X_0, ..., X_k`` (``X_i`` of size
``n_i x m``) under a transformation; see :mod:`dadist.sampling`. For
example the trace-form beta type II family is the law of
``F_i = X_i^H X_i / tr X_0^H X_0`` and has density

.. math::

    \\frac{\\Gamma[H]}{\\Gamma[c_0]} \\prod_{i=1}^k
    \\frac{|F_i|^{\\beta(2 a_i - m + 1)/2 - 1}}{\\Gamma_m^\\beta[\\beta a_i]}
    \\Big(1 + \\sum_{i=1}^k \\operatorname{tr} F_i\\Big)^{-H}.

Pearson type II and beta type I arguments of the determinant-based
families are built as ``R_i = T_i (I + T_i^H T_i)^{-1/2}`` from
``T_i = X_i V^{-1/2}``, so that ``(I - R_i^H R_i)^{-1} R_i^H R_i = T_i^H T_i``
holds exactly; the Jacobian of ``T -> R`` then contributes
``|I - R_i^H R_i|^{-(beta(n_i + m - 1)/2 + 1)}``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum

import numpy as np
from scipy import stats
from scipy.special import gammaln

from . import algebra as alg
from .errors import ConfigurationError, DomainError
from .kernels import Gaussian, KernelSpec, parse_kernel
from .specfun import log_mv_gamma

__all__ = ["FamilyId", "FamilyInstance", "FamilyPoint", "FAMILIES",
           "log_density", "check_domain", "reduce_known", "ClassicalLaw",
           "family_from_name", "slot_names", "slot_kinds"]

LOG_PI = np.log(np.pi)


class FamilyId(str, Enum):
    """Distribution families; values are the command-line names."""

    GAMMA_ELLIPTICAL = "gamma-elliptical"
    WISHART_ELLIPTICAL = "wishart-elliptical"
    MULTI_GAMMA = "multi-gamma"
    MULTI_WISHART = "multi-wishart"
    GAMMA_PEARSON7 = "gamma-pearson7"
    WISHART_T = "wishart-t"
    PEARSON7_MARGINAL = "pearson7-marginal"
    PEARSON7_MATRIC_MARGINAL = "pearson7-matric-marginal"
    GAMMA_PEARSON2 = "gamma-pearson2"
    WISHART_PEARSON2 = "wishart-pearson2"
    PEARSON2_MARGINAL = "pearson2-marginal"
    PEARSON2_MATRIC_MARGINAL = "pearson2-matric-marginal"
    GAMMA_BETA2 = "gamma-beta2"
    WISHART_BETA2 = "wishart-beta2"
    BETA2_MARGINAL = "beta2-marginal"
    BETA2_MATRIC_MARGINAL = "beta2-matric-marginal"
    GAMMA_BETA1 = "gamma-beta1"
    WISHART_BETA1 = "wishart-beta1"
    BETA1_MARGINAL = "beta1-marginal"
    BETA1_MATRIC_MARGINAL = "beta1-matric-marginal"
    GAMMA_GEN_WISHART = "gamma-gen-wishart"
    TRI_GAMMA_P7_P2 = "tri-gamma-p7-p2"
    TRI_WISHART_P7_P2 = "tri-wishart-p7-p2"
    TRI_GAMMA_B2_B1 = "tri-gamma-b2-b1"
    TRI_WISHART_B2_B1 = "tri-wishart-b2-b1"
    INVERSE_BETA1_MIXED = "inverse-beta1-mixed"
    INVERSE_BETA1_MATRIC = "inverse-beta1-matric"
    SCALED_WISHART = "scaled-wishart"

    def __str__(self):
        return self.value


@dataclass(frozen=True)
class _Spec:
    """Static description of a family.

    ``head`` is the slot-0 kind (``"scalar"``, ``"herm"`` or ``None``),
    ``arg`` the kind of slots ``1..k`` and ``prefix`` their symbol.
    """

    kernel: bool
    form: str                 # "trace" or "matric"
    head: str | None          # None, "scalar", "herm"
    head_name: str | None
    arg: str                  # "rect", "herm", "scalar"
    prefix: str
    all_slots: bool = False   # slots indexed 0..k (no separate head)
    fixed_k: int | None = None
    min_k: int = 1
    ball: str | None = None   # "rect_trace", "rect_matric", "herm_trace", "herm_matric"
    partner: "FamilyId | None" = None


F = FamilyId
FAMILIES: dict[FamilyId, _Spec] = {
    F.GAMMA_ELLIPTICAL: _Spec(True, "trace", "scalar", "v", "rect", "X", min_k=0),
    F.WISHART_ELLIPTICAL: _Spec(True, "matric", "herm", "V", "rect", "X", min_k=0),
    F.MULTI_GAMMA: _Spec(True, "trace", None, None, "scalar", "v", all_slots=True, min_k=0),
    F.MULTI_WISHART: _Spec(True, "matric", None, None, "herm", "V", all_slots=True, min_k=0),
    F.GAMMA_PEARSON7: _Spec(True, "trace", "scalar", "v", "rect", "T"),
    F.WISHART_T: _Spec(True, "matric", "herm", "V", "rect", "T"),
    F.PEARSON7_MARGINAL: _Spec(False, "trace", None, None, "rect", "T"),
    F.PEARSON7_MATRIC_MARGINAL: _Spec(False, "matric", None, None, "rect", "T"),
    F.GAMMA_PEARSON2: _Spec(True, "trace", "scalar", "v", "rect", "R", ball="rect_trace"),
    F.WISHART_PEARSON2: _Spec(True, "matric", "herm", "V", "rect", "R", ball="rect_matric"),
    F.PEARSON2_MARGINAL: _Spec(False, "trace", None, None, "rect", "R", ball="rect_trace"),
    F.PEARSON2_MATRIC_MARGINAL: _Spec(False, "matric", None, None, "rect", "R",
                                      ball="rect_matric"),
    F.GAMMA_BETA2: _Spec(True, "trace", "scalar", "v", "herm", "F"),
    F.WISHART_BETA2: _Spec(True, "matric", "herm", "V", "herm", "F"),
    F.BETA2_MARGINAL: _Spec(False, "trace", None, None, "herm", "F"),
    F.BETA2_MATRIC_MARGINAL: _Spec(False, "matric", None, None, "herm", "F"),
    F.GAMMA_BETA1: _Spec(True, "trace", "scalar", "v", "herm", "B", ball="herm_trace"),
    F.WISHART_BETA1: _Spec(True, "matric", "herm", "V", "herm", "B", ball="herm_matric"),
    F.BETA1_MARGINAL: _Spec(False, "trace", None, None, "herm", "B", ball="herm_trace"),
    F.BETA1_MATRIC_MARGINAL: _Spec(False, "matric", None, None, "herm", "B",
                                   ball="herm_matric"),
    F.GAMMA_GEN_WISHART: _Spec(True, "trace", "scalar", "v", "herm", "V", min_k=0),
    F.TRI_GAMMA_P7_P2: _Spec(True, "trace", "scalar", "v", "rect", "", fixed_k=2),
    F.TRI_WISHART_P7_P2: _Spec(True, "matric", "herm", "V", "rect", "", fixed_k=2),
    F.TRI_GAMMA_B2_B1: _Spec(True, "trace", "scalar", "v", "herm", "", fixed_k=2),
    F.TRI_WISHART_B2_B1: _Spec(True, "matric", "herm", "V", "herm", "", fixed_k=2),
    F.INVERSE_BETA1_MIXED: _Spec(False, "trace", None, None, "herm", "B", ball="herm_trace"),
    F.INVERSE_BETA1_MATRIC: _Spec(False, "matric", None, None, "herm", "B",
                                  ball="herm_matric"),
    F.SCALED_WISHART: _Spec(True, "matric", None, None, "herm", "W", all_slots=True, min_k=0),
}

_PARTNERS = {
    F.GAMMA_ELLIPTICAL: F.WISHART_ELLIPTICAL, F.MULTI_GAMMA: F.MULTI_WISHART,
    F.GAMMA_PEARSON7: F.WISHART_T, F.PEARSON7_MARGINAL: F.PEARSON7_MATRIC_MARGINAL,
    F.GAMMA_PEARSON2: F.WISHART_PEARSON2, F.PEARSON2_MARGINAL: F.PEARSON2_MATRIC_MARGINAL,
    F.GAMMA_BETA2: F.WISHART_BETA2, F.BETA2_MARGINAL: F.BETA2_MATRIC_MARGINAL,
    F.GAMMA_BETA1: F.WISHART_BETA1, F.BETA1_MARGINAL: F.BETA1_MATRIC_MARGINAL,
    F.TRI_GAMMA_P7_P2: F.TRI_WISHART_P7_P2, F.TRI_GAMMA_B2_B1: F.TRI_WISHART_B2_B1,
    F.INVERSE_BETA1_MIXED: F.INVERSE_BETA1_MATRIC,
}


def family_from_name(name) -> FamilyId:
    """Look up a family by its kebab-case name (or enum member name)."""
    if isinstance(name, FamilyId):
        return name
    key = str(name).strip()
    try:
        return FamilyId(key)
    except ValueError:
        pass
    try:
        return FamilyId[key.upper().replace("-", "_")]
    except KeyError:
        raise ConfigurationError(
            f"unknown family {name!r}; known: {', '.join(f.value for f in FamilyId)}") from None


def trace_partner(family: FamilyId) -> FamilyId | None:
    """Determinant-based partner of a trace-based family (or ``None``)."""
    return _PARTNERS.get(family_from_name(family))


# ---------------------------------------------------------------------------
# instances and points
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class FamilyInstance:
    """A fully specified distribution.

    Parameters
    ----------
    family : FamilyId or str
    beta : int
    m : int
        Column count (order of the Hermitian arguments).
    a : sequence of float
        Extended shape parameters ``a_0, ..., a_k`` (``a_i = n_i / 2``).
    kernel : KernelSpec or str, optional
        Generator for kernel-dependent families (defaults to gaussian).
    sigmas : sequence of HermitianPD, optional
        Scale matrices ``Sigma_0..Sigma_k`` of the scaled Wishart family.
    r : int
        Number of inverted slots of the inverse beta type I families.

    Raises
    ------
    ConfigurationError
        If a parameter violates a pole condition or the kernel is not
        integrable in the total dimension.
    """

    family: FamilyId
    beta: int
    m: int
    a: tuple
    kernel: KernelSpec | None = None
    sigmas: tuple | None = field(default=None, compare=False)
    r: int = 0

    def __post_init__(self):
        fam = family_from_name(self.family)
        object.__setattr__(self, "family", fam)
        spec = FAMILIES[fam]
        try:
            beta = alg.check_beta(self.beta, self.m)
        except Exception as exc:
            raise ConfigurationError(str(exc)) from None
        object.__setattr__(self, "beta", beta)
        if int(self.m) != self.m or self.m < 1:
            raise ConfigurationError("m must be a positive integer")
        object.__setattr__(self, "m", int(self.m))
        a = tuple(float(x) for x in np.atleast_1d(np.asarray(self.a, dtype=float)))
        object.__setattr__(self, "a", a)
        k = len(a) - 1
        if not all(np.isfinite(a)):
            raise ConfigurationError("shape parameters must be finite")
        if spec.fixed_k is not None and k != spec.fixed_k:
            raise ConfigurationError(f"{fam} needs exactly {spec.fixed_k + 1} parameters")
        if k < spec.min_k:
            raise ConfigurationError(f"{fam} needs at least {spec.min_k + 1} parameters")
        for i, ai in enumerate(a):
            pole = self._pole(i)
            if not ai > pole:
                raise ConfigurationError(
                    f"parameter a{i}={ai:g} must exceed its pole {pole:g}")
        for i in self.rect_slots():
            n = 2.0 * a[i]
            if abs(n - round(n)) > 1e-12 or round(n) < 1:
                raise ConfigurationError(
                    f"a{i} must be a positive half-integer: it fixes the row count of "
                    f"a rectangular argument")
        if fam in (F.INVERSE_BETA1_MIXED, F.INVERSE_BETA1_MATRIC):
            if not 0 <= int(self.r) <= k:
                raise ConfigurationError(f"r must lie in 0..{k}")
            object.__setattr__(self, "r", int(self.r))
        elif self.r:
            raise ConfigurationError("r applies only to the inverse beta type I families")
        if spec.kernel:
            kern = parse_kernel(self.kernel) if self.kernel is not None else Gaussian()
            kern.check(self.total_dim)
            object.__setattr__(self, "kernel", kern)
        elif self.kernel is not None:
            raise ConfigurationError(f"{fam} does not depend on a kernel")
        if fam is F.SCALED_WISHART:
            sig = self.sigmas
            if sig is None:
                sig = tuple(alg.eye(self.m, beta) for _ in a)
            sig = tuple(np.asarray(getattr(s, "data", s), dtype=float) for s in sig)
            if len(sig) != len(a):
                raise ConfigurationError("scaled-wishart needs one Sigma per parameter")
            for s in sig:
                if s.shape != (self.m, self.m, beta) or not bool(alg.is_pd_batch(s, beta)):
                    raise ConfigurationError("each Sigma must be a PD m x m matrix")
            object.__setattr__(self, "sigmas", sig)
        elif self.sigmas is not None:
            raise ConfigurationError("sigmas apply only to scaled-wishart")

    # constructors ----------------------------------------------------------
    @classmethod
    def from_counts(cls, family, beta, m, n, **kwargs) -> "FamilyInstance":
        """Build from integer row counts ``n_0..n_k`` (``a_i = n_i / 2``)."""
        return cls(family, beta, m, tuple(np.asarray(n, dtype=float) / 2.0), **kwargs)

    def with_params(self, a) -> "FamilyInstance":
        """Copy with new shape parameters."""
        return FamilyInstance(self.family, self.beta, self.m, tuple(a), self.kernel,
                              self.sigmas, self.r)

    # derived quantities ----------------------------------------------------
    @property
    def spec(self) -> _Spec:
        return FAMILIES[self.family]

    @property
    def k(self) -> int:
        return len(self.a) - 1

    @property
    def n(self) -> tuple:
        """Row counts ``n_i = 2 a_i`` (possibly fractional)."""
        return tuple(2.0 * x for x in self.a)

    @property
    def total_dim(self) -> float:
        """Total realified dimension ``N = 2 m beta sum a_i``."""
        return 2.0 * sum(self.a) * self.m * self.beta

    def _pole(self, i: int) -> float:
        spec = self.spec
        det_pole = (self.m - 1) / 2.0
        if spec.all_slots:
            return 0.0 if spec.arg == "scalar" else det_pole
        if i == 0:
            return det_pole if spec.form == "matric" else 0.0
        if self.family in (F.TRI_GAMMA_P7_P2, F.TRI_WISHART_P7_P2):
            return 0.0
        if spec.arg == "herm":
            return det_pole
        return 0.0

    def pole(self, i: int) -> float:
        """Lower bound of ``a_i`` (the density needs ``a_i > pole``)."""
        return self._pole(i)

    def slot_kinds(self) -> list:
        return slot_kinds(self.family, self.k)

    def slot_names(self) -> list:
        return slot_names(self.family, self.k, self.r)

    def rect_slots(self) -> list:
        """Indices ``i`` whose argument is an ``n_i x m`` matrix."""
        kinds = self.slot_kinds()
        return [i for i in range(self.k + 1) if _param_slot(self.family, i) is not None
                and kinds[_param_slot(self.family, i)] == "rect"]

    def slot_shape(self, j: int) -> tuple:
        """Shape of one (unbatched) slot value."""
        kind = self.slot_kinds()[j]
        if kind == "scalar":
            return ()
        if kind == "herm":
            return (self.m, self.m, self.beta)
        i = _slot_param(self.family, j)
        return (int(round(2 * self.a[i])), self.m, self.beta)

    # points ----------------------------------------------------------------
    def point(self, *values, batched: bool = False) -> "FamilyPoint":
        """Wrap slot values (floats, DAMatrix, HermitianPD or arrays)."""
        kinds = self.slot_kinds()
        if len(values) == 1 and isinstance(values[0], (list, tuple)) and len(kinds) != 1:
            values = tuple(values[0])
        if len(values) != len(kinds):
            raise ConfigurationError(
                f"{self.family} with k={self.k} takes {len(kinds)} arguments "
                f"({', '.join(self.slot_names())}), got {len(values)}")
        slots = [self._coerce(j, v, batched) for j, v in enumerate(values)]
        sizes = {s.shape[0] for s in slots}
        if len(sizes) != 1:
            raise ConfigurationError("batched slots have different batch sizes")
        return FamilyPoint(tuple(slots), batched=batched, names=tuple(self.slot_names()))

    def point_from_mapping(self, mapping: dict, batched: bool = False) -> "FamilyPoint":
        """Build a point from ``{slot name: value}``; ``F`` aliases ``F1`` when k=1."""
        names = self.slot_names()
        values = []
        used = set()
        for name in names:
            if name in mapping:
                values.append(mapping[name])
                used.add(name)
                continue
            alias = name.rstrip("0123456789")
            if alias != name and alias in mapping and sum(
                    nm.rstrip("0123456789") == alias for nm in names) == 1:
                values.append(mapping[alias])
                used.add(alias)
                continue
            raise ConfigurationError(f"missing argument {name} (expected {', '.join(names)})")
        extra = set(mapping) - used
        if extra:
            raise ConfigurationError(f"unknown arguments: {', '.join(sorted(extra))}")
        return self.point(*values, batched=batched)

    def _coerce(self, j, v, batched):
        kind = self.slot_kinds()[j]
        shape = self.slot_shape(j)
        arr = np.asarray(getattr(v, "data", v), dtype=float)
        if kind == "scalar":
            arr = arr.reshape(-1) if batched else arr.reshape(1)
            return arr
        if not batched:
            arr = arr[None]
        lead = arr.shape[0]
        if arr.shape[1:] == shape:
            return arr
        # convenience forms: scalars for 1x1, omitted beta axis for beta = 1
        if arr.ndim == 1 and shape[0] * shape[1] == 1:
            out = np.zeros((lead,) + shape)
            out[:, 0, 0, 0] = arr
            return out
        if arr.ndim == 2 and shape[1] == 1 and arr.shape[1] == shape[0] * shape[2]:
            return arr.reshape((lead,) + shape)
        if self.beta == 1 and arr.shape[1:] == shape[:2]:
            return arr[..., None]
        raise ConfigurationError(
            f"argument {self.slot_names()[j]} must have shape {shape}, got {arr.shape[1:]}")


@dataclass(frozen=True)
class FamilyPoint:
    """Argument tuple of a family, optionally batched along a leading axis.

    ``slots[j]`` has shape ``(batch,)`` for scalars and
    ``(batch, rows, m, beta)`` for matrices.
    """

    slots: tuple
    batched: bool = False
    names: tuple | None = None

    @property
    def size(self) -> int:
        return self.slots[0].shape[0]

    def __getitem__(self, idx) -> "FamilyPoint":
        """Select batch entries (always returns a batched point)."""
        if isinstance(idx, (int, np.integer)):
            idx = slice(idx, idx + 1 if idx != -1 else None)
        return FamilyPoint(tuple(s[idx] for s in self.slots), batched=True, names=self.names)

    def unbatch(self, i: int = 0) -> "FamilyPoint":
        return FamilyPoint(tuple(s[i:i + 1] for s in self.slots), batched=False,
                           names=self.names)


def slot_kinds(family, k: int) -> list:
    """Kinds (``scalar``, ``herm``, ``rect``) of the argument slots."""
    fam = family_from_name(family)
    spec = FAMILIES[fam]
    if fam in (F.TRI_GAMMA_P7_P2, F.TRI_WISHART_P7_P2):
        return [spec.head, "rect", "rect"]
    if fam in (F.TRI_GAMMA_B2_B1, F.TRI_WISHART_B2_B1):
        return [spec.head, "herm", "herm"]
    if spec.all_slots:
        return [spec.arg] * (k + 1)
    head = [spec.head] if spec.head else []
    return head + [spec.arg] * k


def slot_names(family, k: int, r: int = 0) -> list:
    """Names of the argument slots, e.g. ``["v", "T1", "T2"]``."""
    fam = family_from_name(family)
    spec = FAMILIES[fam]
    if fam in (F.TRI_GAMMA_P7_P2, F.TRI_WISHART_P7_P2):
        return [spec.head_name, "T", "R"]
    if fam in (F.TRI_GAMMA_B2_B1, F.TRI_WISHART_B2_B1):
        return [spec.head_name, "F", "B"]
    if spec.all_slots:
        return [f"{spec.prefix}{i}" for i in range(k + 1)]
    if fam in (F.INVERSE_BETA1_MIXED, F.INVERSE_BETA1_MATRIC):
        return [f"A{i}" if i <= r else f"B{i}" for i in range(1, k + 1)]
    head = [spec.head_name] if spec.head else []
    return head + [f"{spec.prefix}{i}" for i in range(1, k + 1)]


def _has_head(fam):
    spec = FAMILIES[fam]
    return spec.head is not None


def _param_slot(fam, i):
    """Slot index of parameter ``a_i`` (``None`` when a_0 has no slot)."""
    spec = FAMILIES[fam]
    if spec.all_slots:
        return i
    if _has_head(fam):
        return i
    return None if i == 0 else i - 1


def _slot_param(fam, j):
    spec = FAMILIES[fam]
    if spec.all_slots or _has_head(fam):
        return j
    return j + 1


# ---------------------------------------------------------------------------
# domain predicates
# ---------------------------------------------------------------------------

def _hermitian_ok(s, beta):
    h = alg.conj_transpose(s, beta)
    scale = np.maximum(1.0, np.max(np.abs(s), axis=(-3, -2, -1)))
    return np.max(np.abs(s - h), axis=(-3, -2, -1)) <= 1e-10 * scale


def _violations(inst: FamilyInstance, pt: FamilyPoint) -> dict:
    """Map predicate name -> boolean mask of violating batch entries."""
    fam, beta, m = inst.family, inst.beta, inst.m
    spec = inst.spec
    kinds = inst.slot_kinds()
    names = inst.slot_names()
    if len(pt.slots) != len(kinds):
        raise ConfigurationError(
            f"{fam} takes {len(kinds)} arguments, got {len(pt.slots)}")
    size = pt.slots[0].shape[0]
    bad: dict = {}

    def flag(name, mask):
        mask = np.broadcast_to(np.asarray(mask, dtype=bool), (size,))
        bad[name] = bad.get(name, np.zeros(size, bool)) | mask

    for j, (kind, s) in enumerate(zip(kinds, pt.slots)):
        shape = inst.slot_shape(j)
        if s.shape[1:] != shape or s.shape[0] != size:
            raise ConfigurationError(
                f"argument {names[j]} must have shape {shape}, got {s.shape[1:]}")
        finite = np.all(np.isfinite(s.reshape(size, -1)), axis=1)
        flag("finite", ~finite)
        s = np.where(finite.reshape((size,) + (1,) * (s.ndim - 1)), s, 0.0)
        if kind == "scalar":
            flag("positive", ~(s > 0))
        elif kind == "herm":
            herm = _hermitian_ok(s, beta)
            flag("hermitian", ~herm)
            flag("pd", ~alg.is_pd_batch(s, beta))
    if bad.get("finite", np.zeros(size, bool)).any() or bad.get(
            "hermitian", np.zeros(size, bool)).any() or bad.get("pd", np.zeros(size, bool)).any():
        return bad
    # family specific constraints
    first = 1 if (_has_head(fam) and not spec.all_slots) else 0
    args = list(pt.slots[first:])
    eye = alg.eye(m, beta)
    if fam in (F.TRI_GAMMA_P7_P2,):
        flag("trace_ball", ~(alg.trace_gram_batch(pt.slots[2]) < 1.0))
    elif fam in (F.TRI_WISHART_P7_P2,):
        p = eye - alg.gram_batch(pt.slots[2], beta)
        flag("I_minus_RhR_pd", ~alg.is_pd_batch(p, beta))
    elif fam in (F.TRI_GAMMA_B2_B1,):
        flag("trace_lt_one", ~(alg.trace_real_batch(pt.slots[2]) < 1.0))
    elif fam in (F.TRI_WISHART_B2_B1,):
        flag("I_minus_B_pd", ~alg.is_pd_batch(eye - pt.slots[2], beta))
    elif fam is F.INVERSE_BETA1_MIXED:
        for i, s in enumerate(args, start=1):
            if i <= inst.r:
                flag("inverse_trace_lt_one",
                     ~(alg.trace_real_batch(alg.invm_batch(s, beta)) < 1.0))
            else:
                flag("trace_lt_one", ~(alg.trace_real_batch(s) < 1.0))
    elif fam is F.INVERSE_BETA1_MATRIC:
        for i, s in enumerate(args, start=1):
            if i <= inst.r:
                flag("A_minus_I_pd", ~alg.is_pd_batch(s - eye, beta))
            else:
                flag("I_minus_B_pd", ~alg.is_pd_batch(eye - s, beta))
    elif spec.ball == "rect_trace":
        for s in args:
            flag("trace_ball", ~(alg.trace_gram_batch(s) < 1.0))
    elif spec.ball == "rect_matric":
        for s in args:
            flag("I_minus_RhR_pd", ~alg.is_pd_batch(eye - alg.gram_batch(s, beta), beta))
    elif spec.ball == "herm_trace":
        for s in args:
            flag("trace_lt_one", ~(alg.trace_real_batch(s) < 1.0))
    elif spec.ball == "herm_matric":
        for s in args:
            flag("I_minus_B_pd", ~alg.is_pd_batch(eye - s, beta))
    return bad


def check_domain(inst: FamilyInstance, x: FamilyPoint) -> list:
    """Names of violated domain predicates (empty when ``x`` is admissible).

    For batched points a predicate is reported when any entry violates it.
    """
    bad = _violations(inst, x)
    return sorted(name for name, mask in bad.items() if mask.any())


# ---------------------------------------------------------------------------
# densities
# ---------------------------------------------------------------------------

class _Ctx:
    """Shared quantities for one density evaluation."""

    def __init__(self, inst: FamilyInstance):
        self.inst = inst
        self.beta = inst.beta
        self.m = inst.m
        self.a = np.asarray(inst.a)
        self.A = float(np.sum(self.a))
        self.c = self.a * self.m * self.beta
        self.H = self.A * self.m * self.beta
        self.N = 2.0 * self.H

    def lmg(self, x):
        return log_mv_gamma(self.beta, self.m, x)

    def herm_exp(self, ai):
        """Exponent ``beta (2 a_i - m + 1) / 2 - 1`` of ``|F_i|``."""
        return self.beta * (2.0 * ai - self.m + 1.0) / 2.0 - 1.0

    def ball_exp(self, ai):
        """Exponent ``-(beta (2 a_i + m - 1) / 2 + 1)`` of ``|I - R_i^H R_i|``."""
        return -(self.beta * (2.0 * ai + self.m - 1.0) / 2.0 + 1.0)

    def ldet(self, s):
        return alg.logdet_batch(s, self.beta)

    def log_h(self, u):
        return self.inst.kernel.log_h(u, self.N, self.beta)

    def eye(self):
        return alg.eye(self.m, self.beta)

    def gram(self, x):
        return alg.gram_batch(x, self.beta)


def _trace_head(cx, v, power):
    # pi^{c0} / Gamma(c0) v^{power}
    return cx.c[0] * LOG_PI - gammaln(cx.c[0]) + power * np.log(v)


def _matric_head(cx, V, power):
    return (cx.beta * cx.a[0] * cx.m * LOG_PI - cx.lmg(cx.beta * cx.a[0])
            + power * cx.ldet(V))


def _ld_gamma_elliptical(cx, s):
    v, xs = s[0], s[1:]
    u = v + sum((alg.trace_gram_batch(x) for x in xs), 0.0)
    return _trace_head(cx, v, cx.c[0] - 1.0) + cx.log_h(cx.beta * u)


def _ld_wishart_elliptical(cx, s):
    V, xs = s[0], s[1:]
    u = alg.trace_real_batch(V) + sum((alg.trace_gram_batch(x) for x in xs), 0.0)
    return _matric_head(cx, V, cx.herm_exp(cx.a[0])) + cx.log_h(cx.beta * u)


def _ld_multi_gamma(cx, s):
    out = cx.H * LOG_PI + cx.log_h(cx.beta * sum(s))
    for ci, v in zip(cx.c, s):
        out = out - gammaln(ci) + (ci - 1.0) * np.log(v)
    return out


def _ld_multi_wishart(cx, s):
    out = cx.H * LOG_PI + cx.log_h(cx.beta * sum(alg.trace_real_batch(V) for V in s))
    for ai, V in zip(cx.a, s):
        out = out - cx.lmg(cx.beta * ai) + cx.herm_exp(ai) * cx.ldet(V)
    return out


def _ld_scaled_wishart(cx, s):
    sig = cx.inst.sigmas
    u = 0.0
    out = cx.H * LOG_PI
    for ai, W, S in zip(cx.a, s, sig):
        u = u + alg.trace_inner_batch(alg.invm_batch(S, cx.beta), W)
        out = (out - cx.lmg(cx.beta * ai) + cx.herm_exp(ai) * cx.ldet(W)
               - cx.beta * ai * float(alg.logdet_batch(S, cx.beta)))
    return out + cx.log_h(cx.beta * u)


def _ld_gamma_pearson7(cx, s):
    v, ts = s[0], s[1:]
    q = sum(alg.trace_gram_batch(t) for t in ts)
    return _trace_head(cx, v, cx.H - 1.0) + cx.log_h(cx.beta * v * (1.0 + q))


def _ld_wishart_t(cx, s):
    V, ts = s[0], s[1:]
    M = cx.eye() + sum(cx.gram(t) for t in ts)
    return (_matric_head(cx, V, cx.herm_exp(cx.A))
            + cx.log_h(cx.beta * alg.trace_inner_batch(V, M)))


def _ld_pearson7_marginal(cx, s):
    q = sum(alg.trace_gram_batch(t) for t in s)
    return (gammaln(cx.H) - (cx.H - cx.c[0]) * LOG_PI - gammaln(cx.c[0])
            - cx.H * np.log1p(q))


def _ld_pearson7_matric(cx, s):
    M = cx.eye() + sum(cx.gram(t) for t in s)
    b = cx.beta
    return (cx.lmg(b * cx.A) - b * cx.m * (cx.A - cx.a[0]) * LOG_PI
            - cx.lmg(b * cx.a[0]) - b * cx.A * cx.ldet(M))


def _pearson2_trace_terms(cx, rs):
    rho = [alg.trace_gram_batch(r) for r in rs]
    odds = sum(p / (1.0 - p) for p in rho)
    jac = sum(-(ci + 1.0) * np.log1p(-p) for ci, p in zip(cx.c[1:], rho))
    return odds, jac


def _ld_gamma_pearson2(cx, s):
    v, rs = s[0], s[1:]
    odds, jac = _pearson2_trace_terms(cx, rs)
    return _trace_head(cx, v, cx.H - 1.0) + cx.log_h(cx.beta * v * (1.0 + odds)) + jac


def _ld_pearson2_marginal(cx, s):
    odds, jac = _pearson2_trace_terms(cx, s)
    return (gammaln(cx.H) - (cx.H - cx.c[0]) * LOG_PI - gammaln(cx.c[0])
            - cx.H * np.log1p(odds) + jac)


def _ball_matric_terms(cx, ps):
    # Q = I + sum (P_i^{-1} - I); Jacobian sum e_i log|P_i|
    eye = cx.eye()
    Q = eye + sum(alg.invm_batch(p, cx.beta) - eye for p in ps)
    jac = sum(cx.ball_exp(ai) * cx.ldet(p) for ai, p in zip(cx.a[1:], ps))
    return Q, jac


def _ld_wishart_pearson2(cx, s):
    V, rs = s[0], s[1:]
    Q, jac = _ball_matric_terms(cx, [cx.eye() - cx.gram(r) for r in rs])
    return (_matric_head(cx, V, cx.herm_exp(cx.A)) + jac
            + cx.log_h(cx.beta * alg.trace_inner_batch(V, Q)))


def _ld_pearson2_matric(cx, s):
    Q, jac = _ball_matric_terms(cx, [cx.eye() - cx.gram(r) for r in s])
    b = cx.beta
    return (cx.lmg(b * cx.A) - b * cx.m * (cx.A - cx.a[0]) * LOG_PI
            - cx.lmg(b * cx.a[0]) - b * cx.A * cx.ldet(Q) + jac)


def _herm_args(cx, fs, params):
    out = 0.0
    for ai, f in zip(params, fs):
        out = out - cx.lmg(cx.beta * ai) + cx.herm_exp(ai) * cx.ldet(f)
    return out


def _ld_gamma_beta2(cx, s):
    v, fs = s[0], s[1:]
    q = sum(alg.trace_real_batch(f) for f in fs)
    return (cx.H * LOG_PI - gammaln(cx.c[0]) + (cx.H - 1.0) * np.log(v)
            + _herm_args(cx, fs, cx.a[1:]) + cx.log_h(cx.beta * v * (1.0 + q)))


def _ld_wishart_beta2(cx, s):
    V, fs = s[0], s[1:]
    M = cx.eye() + sum(fs)
    return (cx.H * LOG_PI - cx.lmg(cx.beta * cx.a[0]) + cx.herm_exp(cx.A) * cx.ldet(V)
            + _herm_args(cx, fs, cx.a[1:])
            + cx.log_h(cx.beta * alg.trace_inner_batch(V, M)))


def _ld_beta2_marginal(cx, s):
    q = sum(alg.trace_real_batch(f) for f in s)
    return (gammaln(cx.H) - gammaln(cx.c[0]) + _herm_args(cx, s, cx.a[1:])
            - cx.H * np.log1p(q))


def _ld_beta2_matric(cx, s):
    b = cx.beta
    M = cx.eye() + sum(s)
    return (cx.lmg(b * cx.A) - cx.lmg(b * cx.a[0]) + _herm_args(cx, s, cx.a[1:])
            - b * cx.A * cx.ldet(M))


def _beta1_trace_terms(cx, bs):
    tb = [alg.trace_real_batch(b) for b in bs]
    odds = sum(t / (1.0 - t) for t in tb)
    jac = sum(-(ci + 1.0) * np.log1p(-t) for ci, t in zip(cx.c[1:], tb))
    return odds, jac


def _ld_gamma_beta1(cx, s):
    v, bs = s[0], s[1:]
    odds, jac = _beta1_trace_terms(cx, bs)
    return (cx.H * LOG_PI - gammaln(cx.c[0]) + (cx.H - 1.0) * np.log(v)
            + _herm_args(cx, bs, cx.a[1:]) + jac
            + cx.log_h(cx.beta * v * (1.0 + odds)))


def _ld_beta1_marginal(cx, s):
    odds, jac = _beta1_trace_terms(cx, s)
    return (gammaln(cx.H) - gammaln(cx.c[0]) + _herm_args(cx, s, cx.a[1:]) + jac
            - cx.H * np.log1p(odds))


def _ld_wishart_beta1(cx, s):
    V, bs = s[0], s[1:]
    Q, jac = _ball_matric_terms(cx, [cx.eye() - b for b in bs])
    return (cx.H * LOG_PI - cx.lmg(cx.beta * cx.a[0]) + cx.herm_exp(cx.A) * cx.ldet(V)
            + _herm_args(cx, bs, cx.a[1:]) + jac
            + cx.log_h(cx.beta * alg.trace_inner_batch(V, Q)))


def _ld_beta1_matric(cx, s):
    b = cx.beta
    Q, jac = _ball_matric_terms(cx, [cx.eye() - x for x in s])
    return (cx.lmg(b * cx.A) - cx.lmg(b * cx.a[0]) + _herm_args(cx, s, cx.a[1:]) + jac
            - b * cx.A * cx.ldet(Q))


def _ld_gamma_gen_wishart(cx, s):
    v, vs = s[0], s[1:]
    u = v + sum((alg.trace_real_batch(x) for x in vs), 0.0)
    return (cx.H * LOG_PI - gammaln(cx.c[0]) + (cx.c[0] - 1.0) * np.log(v)
            + _herm_args(cx, vs, cx.a[1:]) + cx.log_h(cx.beta * u))


def _ld_tri_gamma_p7_p2(cx, s):
    v, t, r = s
    rho = alg.trace_gram_batch(r)
    u = v * (1.0 + (1.0 - rho) * alg.trace_gram_batch(t))
    return (_trace_head(cx, v, cx.H - 1.0) + (cx.c[0] + cx.c[1] - 1.0) * np.log1p(-rho)
            + cx.log_h(cx.beta * u))


def _tri_matric_arg(cx, V, F, P):
    half = alg.sqrtm_batch(V, cx.beta)
    M = alg.mat_mul(alg.mat_mul(half, F, cx.beta), half, cx.beta)
    return alg.trace_real_batch(V) + alg.trace_inner_batch(P, M)


def _ld_tri_wishart_p7_p2(cx, s):
    V, t, r = s
    P = cx.eye() - cx.gram(r)
    u = _tri_matric_arg(cx, V, cx.gram(t), P)
    e_p = cx.beta * (2.0 * (cx.a[0] + cx.a[1]) - cx.m + 1.0) / 2.0 - 1.0
    return (_matric_head(cx, V, cx.herm_exp(cx.A)) + e_p * cx.ldet(P)
            + cx.log_h(cx.beta * u))


def _ld_tri_gamma_b2_b1(cx, s):
    v, f, b = s
    tb = alg.trace_real_batch(b)
    u = v * (1.0 + (1.0 - tb) * alg.trace_real_batch(f))
    return (cx.H * LOG_PI - gammaln(cx.c[0]) + (cx.H - 1.0) * np.log(v)
            + _herm_args(cx, [f, b], cx.a[1:]) + (cx.c[0] + cx.c[1] - 1.0) * np.log1p(-tb)
            + cx.log_h(cx.beta * u))


def _ld_tri_wishart_b2_b1(cx, s):
    V, f, b = s
    P = cx.eye() - b
    u = _tri_matric_arg(cx, V, f, P)
    e_p = cx.beta * (2.0 * (cx.a[0] + cx.a[1]) - cx.m + 1.0) / 2.0 - 1.0
    return (cx.H * LOG_PI - cx.lmg(cx.beta * cx.a[0]) + cx.herm_exp(cx.A) * cx.ldet(V)
            + _herm_args(cx, [f, b], cx.a[1:]) + e_p * cx.ldet(P)
            + cx.log_h(cx.beta * u))


def _ld_inverse(base):
    def ld(cx, s):
        r = cx.inst.r
        bs = [alg.invm_batch(x, cx.beta) if i < r else x for i, x in enumerate(s)]
        jac = sum((-cx.beta * (cx.m - 1) - 2.0) * cx.ldet(x) for x in s[:r])
        return base(cx, bs) + jac
    return ld


_DENSITY = {
    F.GAMMA_ELLIPTICAL: _ld_gamma_elliptical,
    F.WISHART_ELLIPTICAL: _ld_wishart_elliptical,
    F.MULTI_GAMMA: _ld_multi_gamma,
    F.MULTI_WISHART: _ld_multi_wishart,
    F.GAMMA_PEARSON7: _ld_gamma_pearson7,
    F.WISHART_T: _ld_wishart_t,
    F.PEARSON7_MARGINAL: _ld_pearson7_marginal,
    F.PEARSON7_MATRIC_MARGINAL: _ld_pearson7_matric,
    F.GAMMA_PEARSON2: _ld_gamma_pearson2,
    F.WISHART_PEARSON2: _ld_wishart_pearson2,
    F.PEARSON2_MARGINAL: _ld_pearson2_marginal,
    F.PEARSON2_MATRIC_MARGINAL: _ld_pearson2_matric,
    F.GAMMA_BETA2: _ld_gamma_beta2,
    F.WISHART_BETA2: _ld_wishart_beta2,
    F.BETA2_MARGINAL: _ld_beta2_marginal,
    F.BETA2_MATRIC_MARGINAL: _ld_beta2_matric,
    F.GAMMA_BETA1: _ld_gamma_beta1,
    F.WISHART_BETA1: _ld_wishart_beta1,
    F.BETA1_MARGINAL: _ld_beta1_marginal,
    F.BETA1_MATRIC_MARGINAL: _ld_beta1_matric,
    F.GAMMA_GEN_WISHART: _ld_gamma_gen_wishart,
    F.TRI_GAMMA_P7_P2: _ld_tri_gamma_p7_p2,
    F.TRI_WISHART_P7_P2: _ld_tri_wishart_p7_p2,
    F.TRI_GAMMA_B2_B1: _ld_tri_gamma_b2_b1,
    F.TRI_WISHART_B2_B1: _ld_tri_wishart_b2_b1,
    F.INVERSE_BETA1_MIXED: _ld_inverse(_ld_beta1_marginal),
    F.INVERSE_BETA1_MATRIC: _ld_inverse(_ld_beta1_matric),
    F.SCALED_WISHART: _ld_scaled_wishart,
}


def log_density(inst: FamilyInstance, x, check: bool = True):
    """Log-density of ``inst`` at ``x``.

    Parameters
    ----------
    inst : FamilyInstance
    x : FamilyPoint, dict or sequence
        Point (batched or not); dicts map slot names to values and
        sequences list slot values in order.
    check : bool
        Validate the domain first (disable only for points known to be
        admissible, e.g. sampler output).

    Returns
    -------
    float or ndarray
        Scalar for unbatched points, shape ``(batch,)`` otherwise.

    Raises
    ------
    DomainError
        Naming the violated predicates.

    Examples
    --------
    >>> inst = FamilyInstance("beta2-marginal", 1, 1, (1.5, 0.5))
    >>> round(log_density(inst, {"F": 1.0}), 6)
    -1.837877
    """
    if isinstance(x, dict):
        x = inst.point_from_mapping(x)
    elif not isinstance(x, FamilyPoint):
        x = inst.point(*x) if isinstance(x, (list, tuple)) else inst.point(x)
    if check:
        bad = check_domain(inst, x)
        if bad:
            raise DomainError(
                f"{inst.family}: point violates {', '.join(bad)}", bad)
    with np.errstate(divide="ignore", invalid="ignore"):
        out = _DENSITY[inst.family](_Ctx(inst), list(x.slots))
    out = np.broadcast_to(np.asarray(out, dtype=float), (x.size,))
    return out.copy() if x.batched else float(out[0])


# ---------------------------------------------------------------------------
# classical special cases
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ClassicalLaw:
    """A classical distribution matching a family instance.

    Attributes
    ----------
    name : str
        ``beta``, ``beta-prime``, ``student-t``, ``cauchy``, ``gamma`` or
        ``wishart``.
    params : dict
        Parameters in the scipy convention.
    dist : object
        Frozen scipy distribution.
    """

    name: str
    params: dict
    dist: object = field(repr=False, compare=False)

    def logpdf(self, pt: FamilyPoint):
        """Evaluate on the single slot of a (batched) family point."""
        s = pt.slots[0]
        if self.name == "wishart":
            vals = s[..., 0]
            out = np.array([self.dist.logpdf(v) for v in vals])
        else:
            vals = s if s.ndim == 1 else s.reshape(s.shape[0], -1)[:, 0]
            out = self.dist.logpdf(vals)
        return out if pt.batched else float(out[0])


def reduce_known(inst: FamilyInstance) -> ClassicalLaw | None:
    """Classical distribution equal to ``inst``, if one applies.

    Cases (all with ``m = 1``, unless noted)::

        beta2 marginals, k=1            beta-prime(beta a1, beta a0)
        beta1 marginals, k=1            beta(beta a1, beta a0)
        inverse beta1, k=1, r=1         1 + beta-prime(beta a0, beta a1)
        pearson7 marginals, k=1, beta=1, n1=1
                                        student-t(df=n0, scale=1/sqrt(n0))
        pearson2 marginals, k=1, beta=1, n1=1
                                        beta(a0, a0) on (-1, 1)
        multi-gamma / gamma-elliptical, k=0, gaussian
                                        gamma(a0 m beta, scale=2/beta)
        multi-wishart, k=0, gaussian    gamma (m=1) or wishart(n0, I) (beta=1)
    """
    fam, b, m, a, k = inst.family, inst.beta, inst.m, inst.a, inst.k
    gauss = isinstance(inst.kernel, Gaussian)
    if k == 0 and gauss and fam in (F.MULTI_GAMMA, F.GAMMA_ELLIPTICAL, F.MULTI_WISHART):
        if m == 1:
            p = {"a": a[0] * b, "scale": 2.0 / b}
            return ClassicalLaw("gamma", p, stats.gamma(**p))
        if fam is F.MULTI_WISHART and b == 1:
            p = {"df": 2.0 * a[0], "scale": np.eye(m)}
            return ClassicalLaw("wishart", p, stats.wishart(**p))
        if fam is F.MULTI_GAMMA:
            p = {"a": a[0] * m * b, "scale": 2.0 / b}
            return ClassicalLaw("gamma", p, stats.gamma(**p))
        return None
    if m != 1 or k != 1:
        return None
    if fam in (F.BETA2_MARGINAL, F.BETA2_MATRIC_MARGINAL):
        p = {"a": b * a[1], "b": b * a[0]}
        return ClassicalLaw("beta-prime", p, stats.betaprime(**p))
    if fam in (F.BETA1_MARGINAL, F.BETA1_MATRIC_MARGINAL) or (
            fam in (F.INVERSE_BETA1_MIXED, F.INVERSE_BETA1_MATRIC) and inst.r == 0):
        p = {"a": b * a[1], "b": b * a[0]}
        return ClassicalLaw("beta", p, stats.beta(**p))
    if fam in (F.INVERSE_BETA1_MIXED, F.INVERSE_BETA1_MATRIC) and inst.r == 1:
        p = {"a": b * a[0], "b": b * a[1], "loc": 1.0}
        return ClassicalLaw("beta-prime", p, stats.betaprime(**p))
    if b == 1 and a[1] == 0.5:
        n0 = 2.0 * a[0]
        if fam in (F.PEARSON7_MARGINAL, F.PEARSON7_MATRIC_MARGINAL):
            p = {"df": n0, "scale": 1.0 / np.sqrt(n0)}
            name = "cauchy" if n0 == 1.0 else "student-t"
            return ClassicalLaw(name, p, stats.t(**p))
        if fam in (F.PEARSON2_MARGINAL, F.PEARSON2_MATRIC_MARGINAL):
            p = {"a": a[0], "b": a[0], "loc": -1.0, "scale": 2.0}
            return ClassicalLaw("beta", p, stats.beta(**p))
    return None
