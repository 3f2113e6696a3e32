"""
Constructive samplers.

Each family is the image of a spherical source law with density
``h(beta sum_i tr X_i^H X_i)`` on blocks ``X_0, ..., X_k`` (``X_i`` of size
``n_i x m``). A source draw is a gaussian draw (component variance
``1/beta``) rescaled to a squared radius drawn from the kernel's radial
law. Blocks whose rectangular value is not needed by the target family
are generated in reduced form: a Gram matrix by the Bartlett
decomposition or a trace by a gamma variate. This keeps the law exact and
allows non-integer ``n_i``.

Streams are chunked: chunk ``j`` of a request always uses a Philox
generator keyed by ``(seed, j)``, so output does not depend on the number
of worker threads.
"""
from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import algebra as alg
from .errors import ConfigurationError
from .families import FamilyId, FamilyInstance, FamilyPoint
from .kernels import Gaussian, parse_kernel

__all__ = ["SourceDraw", "sample_source", "derive", "sample", "resolve_seed",
           "chunk_rng", "CHUNK"]

F = FamilyId
CHUNK = 4096


def resolve_seed(seed=None) -> int:
    """Seed from the argument, the ``DADIST_SEED`` variable or fresh entropy."""
    if seed is None:
        env = os.environ.get("DADIST_SEED")
        if env:
            try:
                seed = int(env)
            except ValueError:
                raise ConfigurationError(f"DADIST_SEED must be an integer, got {env!r}") from None
        else:
            seed = int(np.random.SeedSequence().entropy % (2 ** 63))
    seed = int(seed)
    if seed < 0:
        raise ConfigurationError("seed must be non-negative")
    return seed


def chunk_rng(seed: int, chunk: int) -> np.random.Generator:
    """Generator for one chunk of a seeded stream."""
    return np.random.Generator(np.random.Philox(np.random.SeedSequence([int(seed), int(chunk)])))


# ---------------------------------------------------------------------------
# source draws
# ---------------------------------------------------------------------------

@dataclass
class SourceDraw:
    """Blocks of one batched source draw.

    ``rect[i]`` holds ``X_i`` with shape ``(size, n_i, m, beta)`` when it
    was drawn explicitly; ``gram[i]`` and ``trace[i]`` hold ``X_i^H X_i``
    and its trace (computed on demand from ``rect`` when available).
    """

    beta: int
    m: int
    rect: list
    gram: list
    trace: list

    @property
    def k(self) -> int:
        return len(self.trace) - 1

    def X(self, i):
        if self.rect[i] is None:
            raise ConfigurationError(f"block {i} was drawn in reduced form")
        return self.rect[i]

    def G(self, i):
        if self.gram[i] is None:
            if self.rect[i] is None:
                raise ConfigurationError(f"block {i} has no Gram matrix")
            self.gram[i] = alg.gram_batch(self.rect[i], self.beta)
        return self.gram[i]

    def x(self, i):
        if self.trace[i] is None:
            if self.rect[i] is not None:
                self.trace[i] = alg.trace_gram_batch(self.rect[i])
            else:
                self.trace[i] = alg.trace_real_batch(self.gram[i])
        return self.trace[i]


def _gaussian_rect(rng, size, n, m, beta):
    return rng.standard_normal((size, n, m, beta)) / np.sqrt(beta)


def _bartlett(rng, size, n, m, beta):
    """Gram matrix ``Z^H Z`` of an ``n x m`` gaussian block, any real ``n > m - 1``."""
    r = np.zeros((size, m, m, beta))
    for i in range(m):
        r[:, i, i, 0] = np.sqrt(rng.chisquare(beta * (n - i), size=size) / beta)
        if i + 1 < m:
            r[:, i, i + 1:, :] = rng.standard_normal((size, m - i - 1, beta)) / np.sqrt(beta)
    return alg.gram_batch(r, beta)


def _source_kernel(inst, source_kernel):
    if source_kernel is None:
        return inst.kernel
    kern = parse_kernel(source_kernel)
    if inst.kernel is not None and kern != inst.kernel:
        raise ConfigurationError(
            f"{inst.family} depends on its kernel; the source kernel must match it")
    kern.check(inst.total_dim)
    return kern


def _draw(inst: FamilyInstance, size: int, rng, needs, kern=None) -> SourceDraw:
    beta, m = inst.beta, inst.m
    k = inst.k
    rect, gram, trace = [None] * (k + 1), [None] * (k + 1), [None] * (k + 1)
    for i, need in enumerate(needs):
        n = 2.0 * inst.a[i]
        if need == "rect":
            if abs(n - round(n)) > 1e-12:
                raise ConfigurationError(f"block {i} needs an integer row count, got {n:g}")
            rect[i] = _gaussian_rect(rng, size, int(round(n)), m, beta)
        elif need == "gram":
            gram[i] = _bartlett(rng, size, n, m, beta)
        else:
            trace[i] = rng.gamma(n * m * beta / 2.0, 2.0 / beta, size=size)
    src = SourceDraw(beta, m, rect, gram, trace)
    if kern is not None and not isinstance(kern, Gaussian):
        total = sum(src.x(i) for i in range(k + 1))
        scale = kern.sample_radius_sq(inst.total_dim, beta, rng, size) / total
        for i in range(k + 1):
            if rect[i] is not None:
                rect[i] = rect[i] * np.sqrt(scale)[:, None, None, None]
            if src.gram[i] is not None:
                src.gram[i] = src.gram[i] * scale[:, None, None, None]
            src.trace[i] = src.trace[i] * scale
    return src


def sample_source(inst: FamilyInstance, size: int, rng=None,
                  source_kernel=None) -> SourceDraw:
    """Draw all source blocks explicitly (integer row counts only).

    Kernel-free families use ``source_kernel`` (gaussian by default).
    """
    rng = np.random.default_rng(rng)
    return _draw(inst, int(size), rng, ["rect"] * (inst.k + 1),
                 _source_kernel(inst, source_kernel))


# ---------------------------------------------------------------------------
# transformations
# ---------------------------------------------------------------------------

def _needs(inst: FamilyInstance) -> list:
    fam, k = inst.family, inst.k
    rest = lambda kind: [kind] * k  # noqa: E731
    table = {
        F.GAMMA_ELLIPTICAL: ["trace"] + rest("rect"),
        F.WISHART_ELLIPTICAL: ["gram"] + rest("rect"),
        F.MULTI_GAMMA: ["trace"] * (k + 1),
        F.MULTI_WISHART: ["gram"] * (k + 1),
        F.SCALED_WISHART: ["gram"] * (k + 1),
        F.GAMMA_PEARSON7: ["trace"] + rest("rect"),
        F.WISHART_T: ["gram"] + rest("rect"),
        F.PEARSON7_MARGINAL: ["trace"] + rest("rect"),
        F.PEARSON7_MATRIC_MARGINAL: ["gram"] + rest("rect"),
        F.GAMMA_PEARSON2: ["trace"] + rest("rect"),
        F.WISHART_PEARSON2: ["gram"] + rest("rect"),
        F.PEARSON2_MARGINAL: ["trace"] + rest("rect"),
        F.PEARSON2_MATRIC_MARGINAL: ["gram"] + rest("rect"),
        F.GAMMA_BETA2: ["trace"] + rest("gram"),
        F.WISHART_BETA2: ["gram"] * (k + 1),
        F.BETA2_MARGINAL: ["trace"] + rest("gram"),
        F.BETA2_MATRIC_MARGINAL: ["gram"] * (k + 1),
        F.GAMMA_BETA1: ["trace"] + rest("gram"),
        F.WISHART_BETA1: ["gram"] * (k + 1),
        F.BETA1_MARGINAL: ["trace"] + rest("gram"),
        F.BETA1_MATRIC_MARGINAL: ["gram"] * (k + 1),
        F.INVERSE_BETA1_MIXED: ["trace"] + rest("gram"),
        F.INVERSE_BETA1_MATRIC: ["gram"] * (k + 1),
        F.GAMMA_GEN_WISHART: ["trace"] + rest("gram"),
        F.TRI_GAMMA_P7_P2: ["trace", "rect", "rect"],
        F.TRI_WISHART_P7_P2: ["gram", "rect", "rect"],
        F.TRI_GAMMA_B2_B1: ["trace", "gram", "gram"],
        F.TRI_WISHART_B2_B1: ["gram", "gram", "gram"],
    }
    return table[fam]


def _col(x):
    return x[:, None, None, None]


def _congr(s, h, beta):
    """``h s h`` for Hermitian ``h``."""
    return alg.mat_mul(alg.mat_mul(h, s, beta), h, beta)


def _herm(s, beta):
    return 0.5 * (s + alg.conj_transpose(s, beta))


def derive(src: SourceDraw, inst: FamilyInstance) -> FamilyPoint:
    """Map source blocks to a (batched) point of ``inst``."""
    fam, b, m, k = inst.family, inst.beta, inst.m, inst.k
    eye = alg.eye(m, b)
    rng_k = range(1, k + 1)

    def matric_t(i, ih):
        return alg.mat_mul(src.X(i), ih, b)

    def matric_f(i, ih):
        return _herm(_congr(src.G(i), ih, b), b)

    def ball(t):
        # R = T (I + T^H T)^{-1/2}
        return alg.mat_mul(t, alg.invsqrtm_batch(eye + alg.gram_batch(t, b), b), b)

    def beta1(f):
        return _herm(eye - alg.invm_batch(eye + f, b), b)

    if fam in (F.MULTI_GAMMA,):
        slots = [src.x(i) for i in range(k + 1)]
    elif fam in (F.MULTI_WISHART,):
        slots = [src.G(i) for i in range(k + 1)]
    elif fam is F.SCALED_WISHART:
        slots = [_herm(_congr(src.G(i), alg.sqrtm_batch(s, b), b), b)
                 for i, s in enumerate(inst.sigmas)]
    elif fam is F.GAMMA_ELLIPTICAL:
        slots = [src.x(0)] + [src.X(i) for i in rng_k]
    elif fam is F.WISHART_ELLIPTICAL:
        slots = [src.G(0)] + [src.X(i) for i in rng_k]
    elif fam in (F.GAMMA_PEARSON7, F.PEARSON7_MARGINAL):
        v = src.x(0)
        slots = [src.X(i) / np.sqrt(_col(v)) for i in rng_k]
        if fam is F.GAMMA_PEARSON7:
            slots = [v] + slots
    elif fam in (F.WISHART_T, F.PEARSON7_MATRIC_MARGINAL):
        ih = alg.invsqrtm_batch(src.G(0), b)
        slots = [matric_t(i, ih) for i in rng_k]
        if fam is F.WISHART_T:
            slots = [src.G(0)] + slots
    elif fam in (F.GAMMA_PEARSON2, F.PEARSON2_MARGINAL):
        v = src.x(0)
        slots = [src.X(i) / np.sqrt(_col(v + src.x(i))) for i in rng_k]
        if fam is F.GAMMA_PEARSON2:
            slots = [v] + slots
    elif fam in (F.WISHART_PEARSON2, F.PEARSON2_MATRIC_MARGINAL):
        ih = alg.invsqrtm_batch(src.G(0), b)
        slots = [ball(matric_t(i, ih)) for i in rng_k]
        if fam is F.WISHART_PEARSON2:
            slots = [src.G(0)] + slots
    elif fam in (F.GAMMA_BETA2, F.BETA2_MARGINAL, F.GAMMA_GEN_WISHART):
        v = src.x(0)
        if fam is F.GAMMA_GEN_WISHART:
            slots = [v] + [src.G(i) for i in rng_k]
        else:
            slots = [src.G(i) / _col(v) for i in rng_k]
            if fam is F.GAMMA_BETA2:
                slots = [v] + slots
    elif fam in (F.WISHART_BETA2, F.BETA2_MATRIC_MARGINAL):
        ih = alg.invsqrtm_batch(src.G(0), b)
        slots = [matric_f(i, ih) for i in rng_k]
        if fam is F.WISHART_BETA2:
            slots = [src.G(0)] + slots
    elif fam in (F.GAMMA_BETA1, F.BETA1_MARGINAL, F.INVERSE_BETA1_MIXED):
        v = src.x(0)
        slots = [src.G(i) / _col(v + src.x(i)) for i in rng_k]
        if fam is F.GAMMA_BETA1:
            slots = [v] + slots
        elif fam is F.INVERSE_BETA1_MIXED:
            slots = [alg.invm_batch(s, b) if j < inst.r else s for j, s in enumerate(slots)]
    elif fam in (F.WISHART_BETA1, F.BETA1_MATRIC_MARGINAL, F.INVERSE_BETA1_MATRIC):
        ih = alg.invsqrtm_batch(src.G(0), b)
        slots = [beta1(matric_f(i, ih)) for i in rng_k]
        if fam is F.WISHART_BETA1:
            slots = [src.G(0)] + slots
        elif fam is F.INVERSE_BETA1_MATRIC:
            slots = [alg.invm_batch(s, b) if j < inst.r else s for j, s in enumerate(slots)]
    elif fam is F.TRI_GAMMA_P7_P2:
        x0, x2 = src.x(0), src.x(2)
        v = x0 + x2
        slots = [v, src.X(1) / np.sqrt(_col(x0)), src.X(2) / np.sqrt(_col(v))]
    elif fam is F.TRI_WISHART_P7_P2:
        V = src.G(0) + src.G(2)
        slots = [V, matric_t(1, alg.invsqrtm_batch(src.G(0), b)),
                 matric_t(2, alg.invsqrtm_batch(V, b))]
    elif fam is F.TRI_GAMMA_B2_B1:
        x0 = src.x(0)
        v = x0 + src.x(2)
        slots = [v, src.G(1) / _col(x0), src.G(2) / _col(v)]
    elif fam is F.TRI_WISHART_B2_B1:
        V = src.G(0) + src.G(2)
        slots = [V, matric_f(1, alg.invsqrtm_batch(src.G(0), b)),
                 matric_f(2, alg.invsqrtm_batch(V, b))]
    else:  # pragma: no cover
        raise ConfigurationError(f"no constructive sampler for {fam}")
    return FamilyPoint(tuple(np.asarray(s, dtype=float) for s in slots), batched=True,
                       names=tuple(inst.slot_names()))


def _concat(points):
    slots = tuple(np.concatenate([p.slots[j] for p in points])
                  for j in range(len(points[0].slots)))
    return FamilyPoint(slots, batched=True, names=points[0].names)


def sample(inst: FamilyInstance, size: int, seed=None, threads: int = 1,
           source_kernel=None) -> FamilyPoint:
    """Draw ``size`` points of ``inst``.

    Parameters
    ----------
    inst : FamilyInstance
    size : int
    seed : int, optional
        Stream seed; ``None`` falls back to ``DADIST_SEED`` or fresh
        entropy (see :func:`resolve_seed`).
    threads : int
        Worker threads. Results are identical for any thread count.
    source_kernel : KernelSpec or str, optional
        Generator of the source law for kernel-free families (their law
        does not depend on it). Defaults to gaussian.

    Returns
    -------
    FamilyPoint
        Batched point with ``size`` entries.
    """
    size = int(size)
    if size < 0:
        raise ConfigurationError("sample size must be non-negative")
    seed = resolve_seed(seed)
    needs = _needs(inst)
    kern = _source_kernel(inst, source_kernel)
    counts = [min(CHUNK, size - j) for j in range(0, size, CHUNK)] or [0]

    def run(j):
        src = _draw(inst, counts[j], chunk_rng(seed, j), needs, kern)
        return derive(src, inst)

    if threads > 1 and len(counts) > 1:
        with ThreadPoolExecutor(max_workers=int(threads)) as pool:
            parts = list(pool.map(run, range(len(counts))))
    else:
        parts = [run(j) for j in range(len(counts))]
    return _concat(parts)
