"""
Planar landmark data to quaternion samples.

A specimen is an outline of 60 planar landmarks. Pairs of landmarks
``(p, s)`` become quaternions ``q = x_p + y_p i + x_s j + y_s k``; the
default pairs are ``(u, u + 14)`` for ``u = 2, ..., 15``, giving a 14-vector
per specimen. An optional matrix mode adds a second column built from the
reflected sectors 46-59 and 32-45, producing ``14 x 2`` quaternion
matrices.

The plain CSV input format is ``specimen,landmark_index,x,y`` with
1-based landmark indices.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from .algebra import gram_batch
from .errors import ConfigurationError
from .families import FamilyPoint

__all__ = ["LandmarkSet", "QuaternionSample", "DEFAULT_PAIRS", "N_LANDMARKS",
           "read_landmarks_csv", "write_landmarks_csv", "read_quaternions_csv",
           "write_quaternions_csv", "build_quaternion_sample", "build_matrix_sample",
           "symmetrize", "reflect", "to_dataset", "parse_pairs"]

N_LANDMARKS = 60
DEFAULT_PAIRS = tuple((u, u + 14) for u in range(2, 16))
DEFAULT_CUT = (30, 45)


@dataclass(frozen=True)
class LandmarkSet:
    """Landmarks of one specimen; ``points[j - 1]`` is landmark ``j``."""

    specimen: str
    points: np.ndarray

    def __post_init__(self):
        pts = np.array(self.points, dtype=float)
        if pts.shape != (N_LANDMARKS, 2):
            raise ConfigurationError(
                f"specimen {self.specimen}: expected {N_LANDMARKS} planar landmarks, "
                f"got shape {pts.shape}")
        if not np.all(np.isfinite(pts)):
            raise ConfigurationError(f"specimen {self.specimen}: non-finite coordinates")
        pts.setflags(write=False)
        object.__setattr__(self, "points", pts)

    def landmark(self, j: int) -> np.ndarray:
        return self.points[j - 1]


@dataclass(frozen=True)
class QuaternionSample:
    """Quaternion vector (or ``n x 2`` matrix) of one specimen.

    ``data`` has shape ``(n, columns, 4)`` with components ``(a, b, c, d)``
    of ``a + b i + c j + d k``.
    """

    specimen: str
    data: np.ndarray

    def __post_init__(self):
        d = np.array(self.data, dtype=float)
        if d.ndim == 2:
            d = d[:, None, :]
        if d.ndim != 3 or d.shape[-1] != 4 or d.shape[0] == 0:
            raise ConfigurationError("quaternion data must have shape (n, columns, 4)")
        d.setflags(write=False)
        object.__setattr__(self, "data", d)

    @property
    def q(self) -> np.ndarray:
        """The first column, shape ``(n, 4)``."""
        return self.data[:, 0, :]

    @property
    def columns(self) -> int:
        return self.data.shape[1]

    def __len__(self) -> int:
        return self.data.shape[0]


def parse_pairs(text) -> tuple:
    """``"default"`` or ``"2-16,3-17,..."`` (also ``2:16``) to a pair tuple."""
    if text is None or str(text).strip() == "default":
        return DEFAULT_PAIRS
    pairs = []
    for item in str(text).split(","):
        item = item.strip()
        if not item:
            continue
        sep = "-" if "-" in item else ":"
        try:
            p, s = (int(v) for v in item.split(sep))
        except ValueError:
            raise ConfigurationError(f"cannot parse landmark pair {item!r}") from None
        pairs.append((p, s))
    return tuple(pairs)


def _check_pairs(pairing):
    pairing = tuple(tuple(int(v) for v in p) for p in pairing)
    if not pairing:
        raise ConfigurationError("pairing is empty")
    seen = set()
    for pair in pairing:
        if len(pair) != 2:
            raise ConfigurationError(f"pairs must have two indices, got {pair}")
        for j in set(pair):
            if not 1 <= j <= N_LANDMARKS:
                raise ConfigurationError(f"landmark index {j} outside 1..{N_LANDMARKS}")
            if j in seen:
                raise ConfigurationError(f"landmark {j} appears in more than one pair")
            seen.add(j)
    return pairing


def _quat(first, second):
    return np.array([first[0], first[1], second[0], second[1]])


def build_quaternion_sample(lms: LandmarkSet, pairing=DEFAULT_PAIRS) -> QuaternionSample:
    """Quaternion vector with ``q_u = (x_p, y_p, x_s, y_s)`` for each pair ``(p, s)``.

    Raises
    ------
    ConfigurationError
        For indices outside ``1..60`` or an index shared by two pairs.
    """
    pairing = _check_pairs(pairing)
    q = np.stack([_quat(lms.landmark(p), lms.landmark(s)) for p, s in pairing])
    return QuaternionSample(lms.specimen, q)


def _axis(lms: LandmarkSet, cut) -> float:
    return 0.5 * (lms.landmark(cut[0])[0] + lms.landmark(cut[1])[0])


def reflect(point, x0: float) -> np.ndarray:
    """Mirror image of a planar point in the vertical line ``x = x0``."""
    point = np.asarray(point, dtype=float)
    return np.array([2.0 * x0 - point[..., 0], point[..., 1]]).T


def symmetrize(lms: LandmarkSet, cut_indices=DEFAULT_CUT) -> LandmarkSet:
    """Replace landmarks 46-60 by the mirror image of landmarks 29-15.

    The mirror is the vertical line through the midpoint of the two cut
    landmarks; landmark ``j`` of the new sector is the reflection of
    landmark ``75 - j``. Landmarks 1-45 are unchanged, so the operation is
    idempotent and fixes an already symmetric outline.
    """
    lo, hi = (int(c) for c in cut_indices)
    if not (1 <= lo < hi <= N_LANDMARKS):
        raise ConfigurationError(f"invalid cut indices {cut_indices}")
    x0 = _axis(lms, (lo, hi))
    pts = np.array(lms.points)
    for j in range(hi + 1, N_LANDMARKS + 1):
        src = lo + hi - j
        if src < 1:
            raise ConfigurationError("cut indices leave no mirror sector")
        pts[j - 1] = reflect(lms.landmark(src), x0)
    return LandmarkSet(lms.specimen, pts)


def build_matrix_sample(lms: LandmarkSet, pairing=DEFAULT_PAIRS,
                        cut_indices=DEFAULT_CUT) -> QuaternionSample:
    """``n x 2`` quaternion matrix.

    Column one is :func:`build_quaternion_sample`. For the default pairs,
    row ``u`` of column two is built from the reflections of landmarks
    ``u + 44`` (sector 46-59) and ``u + 30`` (sector 32-45); custom pairs
    ``(p, s)`` use ``p + 44`` and ``s + 16``.
    """
    pairing = _check_pairs(pairing)
    x0 = _axis(lms, cut_indices)
    col1 = np.stack([_quat(lms.landmark(p), lms.landmark(s)) for p, s in pairing])
    rows = []
    for p, s in pairing:
        j1, j2 = p + 44, s + 16
        if not (1 <= j1 <= N_LANDMARKS and 1 <= j2 <= N_LANDMARKS):
            raise ConfigurationError(f"pair ({p}, {s}) has no mirror landmarks")
        rows.append(_quat(reflect(lms.landmark(j1), x0), reflect(lms.landmark(j2), x0)))
    return QuaternionSample(lms.specimen, np.stack([col1, np.stack(rows)], axis=1))


# ---------------------------------------------------------------------------
# data sets
# ---------------------------------------------------------------------------

def _gram_quaternion(t):
    """``T^H T`` for quaternion matrices ``(..., n, c, 4)`` as realified ``(..., c, c, 4)``."""
    return gram_batch(t, 4)


def to_dataset(samples, layout: str = "pooled") -> list:
    """Fit data from quaternion samples.

    Parameters
    ----------
    samples : sequence of QuaternionSample
    layout : {"pooled", "specimen"}
        ``pooled``: a single dependent collection whose ``i``-th argument is
        ``F_i = T_i^H T_i`` for specimen ``i`` (a scalar for vectors, a
        ``2 x 2`` quaternion Hermitian matrix in matrix mode).
        ``specimen``: one replicate per specimen with arguments
        ``F_u = |q_u|^2`` (vector mode only).

    Returns
    -------
    list of FamilyPoint
        Replicates with realified ``(1, c, c, 4)`` arguments.
    """
    samples = list(samples)
    if not samples:
        raise ConfigurationError("no quaternion samples")
    shapes = {s.data.shape for s in samples}
    if len(shapes) != 1:
        raise ConfigurationError("quaternion samples must share length and column count")
    stack = np.stack([s.data for s in samples])          # (specimens, n, c, 4)
    if layout == "pooled":
        grams = _gram_quaternion(stack)                   # (specimens, c, c, 4)
        return [FamilyPoint(tuple(g[None] for g in grams), batched=True)]
    if layout == "specimen":
        if stack.shape[2] != 1:
            raise ConfigurationError("the specimen layout needs vector samples")
        f = np.sum(stack[:, :, 0, :] ** 2, axis=-1)        # (specimens, n)
        slots = []
        for u in range(f.shape[1]):
            s = np.zeros((f.shape[0], 1, 1, 4))
            s[:, 0, 0, 0] = f[:, u]
            slots.append(s)
        return [FamilyPoint(tuple(slots), batched=True)]
    raise ConfigurationError(f"unknown layout {layout!r}; use pooled or specimen")


# ---------------------------------------------------------------------------
# CSV
# ---------------------------------------------------------------------------

def read_landmarks_csv(path) -> list:
    """Read ``specimen,landmark_index,x,y`` rows (header optional)."""
    rows: dict = {}
    with open(path, newline="") as fh:
        for lineno, row in enumerate(csv.reader(fh), start=1):
            if not row or row[0].startswith("#"):
                continue
            if lineno == 1 and row[0].strip().lower() == "specimen":
                continue
            if len(row) != 4:
                raise ConfigurationError(f"{path}:{lineno}: expected 4 fields")
            try:
                spec, j, x, y = row[0].strip(), int(row[1]), float(row[2]), float(row[3])
            except ValueError:
                raise ConfigurationError(f"{path}:{lineno}: malformed row") from None
            if not 1 <= j <= N_LANDMARKS:
                raise ConfigurationError(f"{path}:{lineno}: landmark index {j} out of range")
            pts = rows.setdefault(spec, {})
            if j in pts:
                raise ConfigurationError(f"{path}:{lineno}: duplicate landmark {j} for {spec}")
            pts[j] = (x, y)
    out = []
    for spec, pts in rows.items():
        if len(pts) != N_LANDMARKS:
            raise ConfigurationError(
                f"specimen {spec} has {len(pts)} landmarks, expected {N_LANDMARKS}")
        out.append(LandmarkSet(spec, [pts[j] for j in range(1, N_LANDMARKS + 1)]))
    if not out:
        raise ConfigurationError(f"{path}: no landmarks")
    return out


def write_landmarks_csv(path, sets) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["specimen", "landmark_index", "x", "y"])
        for lms in sets:
            for j, (x, y) in enumerate(lms.points, start=1):
                w.writerow([lms.specimen, j, repr(float(x)), repr(float(y))])


def write_quaternions_csv(path, samples) -> None:
    """Write ``specimen,row,column,a,b,c,d`` with round-trip exact floats."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["specimen", "row", "column", "a", "b", "c", "d"])
        for s in samples:
            for i in range(s.data.shape[0]):
                for c in range(s.data.shape[1]):
                    w.writerow([s.specimen, i + 1, c + 1]
                               + [repr(float(v)) for v in s.data[i, c]])


def read_quaternions_csv(path) -> list:
    """Inverse of :func:`write_quaternions_csv`."""
    cells: dict = {}
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        for lineno, row in enumerate(reader, start=1):
            if not row or row[0].startswith("#") or (lineno == 1 and row[0] == "specimen"):
                continue
            if len(row) != 7:
                raise ConfigurationError(f"{path}:{lineno}: expected 7 fields")
            try:
                key = (int(row[1]), int(row[2]))
                vals = [float(v) for v in row[3:]]
            except ValueError:
                raise ConfigurationError(f"{path}:{lineno}: malformed row") from None
            cells.setdefault(row[0], {})[key] = vals
    out = []
    for spec, cell in cells.items():
        n = max(k[0] for k in cell)
        c = max(k[1] for k in cell)
        if len(cell) != n * c:
            raise ConfigurationError(f"specimen {spec}: incomplete quaternion table")
        data = np.array([[cell[(i, j)] for j in range(1, c + 1)] for i in range(1, n + 1)])
        out.append(QuaternionSample(spec, data))
    if not out:
        raise ConfigurationError(f"{path}: no quaternions")
    return out
