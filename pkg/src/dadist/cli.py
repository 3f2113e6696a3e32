"""
Command-line interface.

Subcommands: ``logpdf``, ``sample``, ``fit``, ``validate``,
``ingest-landmarks`` and ``plot-data``. Instance options may come from a
flat ``key=value`` config file; explicit flags take precedence. User
errors exit with status 1 and a one-line JSON object on stderr; failing
validation checks exit with status 2.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import math
import re
import sys

import numpy as np

from . import __version__
from .errors import ConfigurationError, DadistError
from .estimation import FitProblem, fit, profile
from .families import FAMILIES, FamilyInstance, FamilyPoint, family_from_name, \
    log_density
from .sampling import resolve_seed, sample
from .shapes_ingest import (build_matrix_sample, build_quaternion_sample, parse_pairs,
                            read_landmarks_csv, read_quaternions_csv, to_dataset,
                            write_quaternions_csv)
from .suites import SUITES, run_suite

__all__ = ["main", "run", "read_matrix_csv", "write_matrix_csv", "read_sample_csv",
           "write_sample_csv", "read_config"]

_PARAM = re.compile(r"^--([an])(\d+)(?:=(.*))?$")
_MATRIX_HEADER = re.compile(r"^#\s*dadist-matrix\s+beta=(\d+)\s+n=(\d+)\s+m=(\d+)\s*$")


class CliError(Exception):
    """Usage error raised by the argument parser."""


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise CliError(message)


# ---------------------------------------------------------------------------
# file formats
# ---------------------------------------------------------------------------

def read_matrix_csv(path) -> np.ndarray:
    """Read a ``# dadist-matrix beta=<b> n=<n> m=<m>`` file as a realified array.

    Rows are ``i,j,c1..c_beta`` with 1-based ``i, j``; every entry must
    appear exactly once.
    """
    with open(path, newline="") as fh:
        lines = [ln for ln in fh.read().splitlines() if ln.strip()]
    if not lines:
        raise ConfigurationError(f"{path}: empty matrix file")
    head = _MATRIX_HEADER.match(lines[0].strip())
    if not head:
        raise ConfigurationError(
            f"{path}: first line must be '# dadist-matrix beta=<b> n=<n> m=<m>'")
    beta, n, m = (int(v) for v in head.groups())
    if beta not in (1, 2, 4, 8):
        raise ConfigurationError(f"{path}: beta must be 1, 2, 4 or 8")
    out = np.zeros((n, m, beta))
    seen = set()
    for lineno, row in enumerate(csv.reader(lines[1:]), start=2):
        if len(row) != 2 + beta:
            raise ConfigurationError(f"{path}:{lineno}: expected {2 + beta} fields")
        try:
            i, j = int(row[0]), int(row[1])
            vals = [float(v) for v in row[2:]]
        except ValueError:
            raise ConfigurationError(f"{path}:{lineno}: malformed row") from None
        if not (1 <= i <= n and 1 <= j <= m) or (i, j) in seen:
            raise ConfigurationError(f"{path}:{lineno}: bad or repeated entry ({i}, {j})")
        seen.add((i, j))
        out[i - 1, j - 1] = vals
    if len(seen) != n * m:
        raise ConfigurationError(f"{path}: expected {n * m} entries, found {len(seen)}")
    return out


def write_matrix_csv(path, x) -> None:
    """Inverse of :func:`read_matrix_csv` for an ``(n, m, beta)`` array."""
    x = np.asarray(x, dtype=float)
    n, m, beta = x.shape
    with open(path, "w", newline="") as fh:
        fh.write(f"# dadist-matrix beta={beta} n={n} m={m}\n")
        w = csv.writer(fh)
        for i in range(n):
            for j in range(m):
                w.writerow([i + 1, j + 1] + [repr(float(v)) for v in x[i, j]])


def _columns(name, shape):
    if shape == ():
        return [name]
    n, m, beta = shape
    return [f"{name}.{i + 1}.{j + 1}.{c + 1}"
            for i in range(n) for j in range(m) for c in range(beta)]


def write_sample_csv(fh, pt: FamilyPoint, names, header: str) -> None:
    """One row per draw; columns ``slot.i.j.c`` (1-based), scalars by name."""
    fh.write(f"# {header}\n")
    w = csv.writer(fh, lineterminator="\n")
    cols, blocks = [], []
    for name, s in zip(names, pt.slots):
        cols += _columns(name, s.shape[1:])
        blocks.append(s.reshape(s.shape[0], -1))
    w.writerow(cols)
    flat = np.concatenate(blocks, axis=1) if blocks else np.zeros((0, 0))
    for row in flat:
        w.writerow([repr(float(v)) for v in row])


def read_sample_csv(path, beta: int | None = None):
    """Read a sample CSV back.

    Returns
    -------
    names : list of str
    slots : list of ndarray
        ``(rows,)`` for bare-named scalar columns, ``(rows, n, m, b)``
        otherwise. A bare column with ``beta`` given is read as a ``1 x 1``
        Hermitian argument.
    """
    with open(path, newline="") as fh:
        lines = [ln for ln in fh.read().splitlines() if ln.strip() and not ln.startswith("#")]
    if not lines:
        raise ConfigurationError(f"{path}: no header row")
    rows = list(csv.reader(lines))
    header, body = rows[0], rows[1:]
    try:
        data = np.array([[float(v) for v in r] for r in body], dtype=float).reshape(
            len(body), len(header))
    except ValueError:
        raise ConfigurationError(f"{path}: non-numeric or ragged rows") from None
    order, index = [], {}
    for col, name in enumerate(header):
        parts = name.strip().split(".")
        key = parts[0]
        if key not in index:
            index[key] = []
            order.append(key)
        if len(parts) == 1:
            index[key].append((col, None))
        elif len(parts) == 4:
            try:
                index[key].append((col, tuple(int(p) - 1 for p in parts[1:])))
            except ValueError:
                raise ConfigurationError(f"{path}: bad column name {name!r}") from None
        else:
            raise ConfigurationError(f"{path}: bad column name {name!r}")
    slots = []
    for key in order:
        entries = index[key]
        if entries[0][1] is None:
            if len(entries) != 1:
                raise ConfigurationError(f"{path}: repeated column {key!r}")
            col = data[:, entries[0][0]]
            if beta is None:
                slots.append(col)
            else:
                s = np.zeros((len(col), 1, 1, beta))
                s[:, 0, 0, 0] = col
                slots.append(s)
            continue
        shape = tuple(max(e[1][d] for e in entries) + 1 for d in range(3))
        if len(entries) != int(np.prod(shape)):
            raise ConfigurationError(f"{path}: incomplete columns for {key!r}")
        s = np.zeros((len(data),) + shape)
        for col, (i, j, c) in entries:
            s[:, i, j, c] = data[:, col]
        slots.append(s)
    return order, slots


def read_config(path) -> dict:
    """Flat ``key=value`` lines; ``#`` starts a comment."""
    out = {}
    try:
        fh = open(path)
    except OSError as exc:
        raise ConfigurationError(f"cannot read config {path}: {exc.strerror}") from None
    with fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ConfigurationError(f"{path}:{lineno}: expected key=value")
            key, val = (p.strip() for p in line.split("=", 1))
            out[key.replace("-", "_")] = val
    return out


# ---------------------------------------------------------------------------
# instance options
# ---------------------------------------------------------------------------

_INSTANCE_KEYS = ("family", "beta", "m", "kernel", "a", "n", "k", "r")


def _add_instance(p, kernel=True):
    p.add_argument("--config", help="key=value file; flags override it")
    p.add_argument("--family", help="family id, e.g. beta2-marginal")
    p.add_argument("--beta", type=int, help="algebra dimension 1, 2, 4 or 8")
    p.add_argument("--m", type=int, help="number of columns")
    p.add_argument("--a", help="a0,a1,...,ak or, with --k, one value shared by a1..ak")
    p.add_argument("--n", help="n0,n1,...,nk (a_i = n_i / 2)")
    p.add_argument("--k", type=int, help="number of arguments when --a is a single value")
    p.add_argument("--r", type=int, help="inverted arguments (inverse beta type I families)")
    if kernel:
        p.add_argument("--kernel", help="gaussian | pearson7:q=<f>,s=<f> | kotz:t=<f>")
    p.epilog = "Per-index parameters are given as --a0 1.5 --a1 0.5 or --n0 3 --n1 1."


def _split_params(extras):
    """Pull ``--aN`` / ``--nN`` out of unparsed arguments."""
    rest = list(extras)
    out = {}
    i = 0
    while i < len(rest):
        mt = _PARAM.match(rest[i])
        if not mt:
            raise CliError(f"unrecognized arguments: {' '.join(rest[i:])}")
        kind, idx, val = mt.group(1), int(mt.group(2)), mt.group(3)
        if val is None:
            if i + 1 >= len(rest):
                raise CliError(f"argument --{kind}{idx}: expected one argument")
            val = rest[i + 1]
            i += 1
        out[f"{kind}{idx}"] = val
        i += 1
    return out


def _merge(args, config, indexed):
    """Flags over config values; returns the merged option dict."""
    opts = {k: v for k, v in config.items()}
    for key, val in vars(args).items():
        if val is not None and key not in ("command", "func"):
            opts[key] = val
    # per-index flags override per-index config entries and list forms
    for key, val in indexed.items():
        opts[key] = val
    return opts


def _float(key, val):
    try:
        return float(val)
    except (TypeError, ValueError):
        raise ConfigurationError(f"{key} must be a number, got {val!r}") from None


def _int(key, val):
    try:
        f = float(val)
    except (TypeError, ValueError):
        f = math.nan
    if not float(f).is_integer():
        raise ConfigurationError(f"{key} must be an integer, got {val!r}")
    return int(f)


def _shape_params(opts) -> tuple:
    """``a_0..a_k`` from ``aN``/``nN`` entries or the ``a``/``n`` list forms."""
    idx = {}
    for key, val in opts.items():
        mt = re.fullmatch(r"([an])(\d+)", key)
        if mt:
            v = _float(key, val)
            idx[int(mt.group(2))] = v / 2.0 if mt.group(1) == "n" else v
    base: list = []
    if opts.get("n") is not None:
        base = [_float("n", v) / 2.0 for v in str(opts["n"]).split(",")]
    if opts.get("a") is not None:
        vals = [_float("a", v) for v in str(opts["a"]).split(",")]
        if len(vals) == 1 and opts.get("k") is not None:
            k = _int("k", opts["k"])
            a0 = idx.get(0, base[0] if base else None)
            if a0 is None:
                raise ConfigurationError("--a with --k needs --a0 (or --n0)")
            base = [a0] + vals * k
        else:
            base = vals
    size = max([len(base)] + [i + 1 for i in idx])
    a = [None] * size
    for i, v in enumerate(base):
        a[i] = v
    for i, v in idx.items():
        a[i] = v
    if not a or any(v is None for v in a):
        missing = [f"a{i}" for i, v in enumerate(a) if v is None] or ["a0"]
        raise ConfigurationError(f"missing shape parameters: {', '.join(missing)}")
    return tuple(a)


def _require(opts, key):
    if opts.get(key) is None:
        raise ConfigurationError(f"missing --{key.replace('_', '-')}")
    return opts[key]


def _instance(opts) -> FamilyInstance:
    family = family_from_name(_require(opts, "family"))
    beta = _int("beta", _require(opts, "beta"))
    m = _int("m", opts.get("m", 1))
    kernel = opts.get("kernel")
    r = _int("r", opts.get("r", 0))
    return FamilyInstance(family, beta, m, _shape_params(opts), kernel=kernel, r=r)


def _parse_value(text):
    """A float, ``c1:c2:...`` components of a ``1 x 1`` entry, or ``@file.csv``."""
    text = text.strip()
    if text.startswith("@"):
        return read_matrix_csv(text[1:])
    parts = text.split(":")
    vals = [_float("point value", p) for p in parts]
    if len(vals) == 1:
        return vals[0]
    return np.array(vals).reshape(1, 1, len(vals))


def _point_mapping(items) -> dict:
    out = {}
    for item in items or []:
        if "=" not in item:
            raise ConfigurationError(f"--point expects NAME=VALUE, got {item!r}")
        name, val = item.split("=", 1)
        out[name.strip()] = _parse_value(val)
    return out


def _coerce_entry(inst, mapping):
    """Pad ``1 x 1`` component arrays to the slot's beta."""
    fixed = {}
    for name, val in mapping.items():
        if isinstance(val, np.ndarray) and val.shape[:2] == (1, 1) and val.shape[2] < inst.beta:
            pad = np.zeros((1, 1, inst.beta))
            pad[..., :val.shape[2]] = val
            val = pad
        fixed[name] = val
    return fixed


# ---------------------------------------------------------------------------
# output helpers
# ---------------------------------------------------------------------------

def _emit(text: str, out):
    if out:
        with open(out, "w", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _json_default(obj):
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, np.bool_):
        return bool(obj)
    raise TypeError(type(obj).__name__)


def _dumps(obj) -> str:
    return json.dumps(obj, default=_json_default, indent=2) + "\n"


def _describe(inst: FamilyInstance) -> str:
    a = ",".join(f"{v:g}" for v in inst.a)
    text = f"family={inst.family.value} beta={inst.beta} m={inst.m} a={a}"
    if inst.kernel is not None and FAMILIES[inst.family].kernel:
        text += f" kernel={inst.kernel}"
    if inst.r:
        text += f" r={inst.r}"
    return text


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------

def _cmd_logpdf(args, opts):
    inst = _instance(opts)
    if args.data:
        names, slots = read_sample_csv(args.data)
        pt = inst.point(*slots, batched=True)
        vals = log_density(inst, pt)
        buf = io.StringIO()
        buf.write("logpdf\n")
        for v in np.atleast_1d(vals):
            buf.write(f"{float(v)!r}\n")
        _emit(buf.getvalue(), args.out)
        return 0
    if not args.point:
        raise ConfigurationError("logpdf needs --point NAME=VALUE (repeatable) or --data")
    pt = inst.point_from_mapping(_coerce_entry(inst, _point_mapping(args.point)))
    val = float(log_density(inst, pt))
    if args.json:
        _emit(_dumps({"family": inst.family.value, "beta": inst.beta, "m": inst.m,
                      "a": list(inst.a), "logpdf": val}), args.out)
    else:
        _emit(f"{val:.6f}\n", args.out)
    return 0


def _cmd_sample(args, opts):
    inst = _instance(opts)
    count = _int("count", _require(opts, "count"))
    seed = resolve_seed(opts.get("seed") if opts.get("seed") is None
                        else _int("seed", opts["seed"]))
    threads = _int("threads", opts.get("threads", 1))
    pts = sample(inst, count, seed=seed, threads=threads,
                 source_kernel=opts.get("source_kernel"))
    buf = io.StringIO()
    write_sample_csv(buf, pts, inst.slot_names(), f"dadist-sample seed={seed} {_describe(inst)}")
    _emit(buf.getvalue(), args.out)
    return 0


def _fit_problem(opts) -> FitProblem:
    family = family_from_name(_require(opts, "family"))
    beta = _int("beta", _require(opts, "beta"))
    m = _int("m", opts.get("m", 1))
    tie = opts.get("tie")
    r = _int("r", opts.get("r", 0))
    if opts.get("quaternions"):
        if beta != 4:
            raise ConfigurationError("quaternion data need --beta 4")
        data = to_dataset(read_quaternions_csv(opts["quaternions"]), opts.get("layout", "pooled"))
        return FitProblem(family, beta, m, data, tie=tie, r=r)
    path = _require(opts, "data")
    names, slots = read_sample_csv(path, beta=beta if m == 1 else None)
    slots = [s.reshape(-1, 1, 1, beta) if s.ndim == 1 else s for s in slots]
    return FitProblem(family, beta, m, [FamilyPoint(tuple(slots), batched=True)], tie=tie, r=r)


def _fit_opts(opts):
    return {"restarts": _int("restarts", opts.get("restarts", 16)),
            "seed": _int("seed", opts["seed"]) if opts.get("seed") is not None else 0,
            "threads": _int("threads", opts.get("threads", 1))}


def _cmd_fit(args, opts):
    prob = _fit_problem(opts)
    kw = _fit_opts(opts)
    res = fit(prob, **kw)
    out = res.to_dict()
    out.update({"family": prob.family.value, "beta": prob.beta, "m": prob.m, "k": prob.k,
                "replicates": prob.replicates, "seed": kw["seed"],
                "restarts": kw["restarts"]})
    _emit(_dumps(out), args.out)
    return 0


def _cmd_validate(args, opts):
    names = list(SUITES) if "all" in args.suite else list(dict.fromkeys(args.suite))
    seed = _int("seed", opts["seed"]) if opts.get("seed") is not None else 0
    reports = []
    for name in names:
        kw = {}
        if name in ("algebra", "jacobians", "normalization", "reductions", "kernels"):
            kw["seed"] = seed
        if name == "normalization":
            if args.draws is not None:
                kw["draws"] = args.draws
            if args.no_quad:
                kw["quad"] = False
        if name == "landmarks" and args.data:
            kw["path"] = args.data
        reports.append(run_suite(name, **kw).to_dict())
    passed = all(r["passed"] or r["skipped"] for r in reports)
    _emit(_dumps({"passed": passed, "seed": seed, "version": __version__,
                  "suites": reports}), args.out)
    return 0 if passed else 2


def _cmd_ingest(args, opts):
    sets = read_landmarks_csv(args.input)
    pairs = parse_pairs(args.pairs)
    build = build_quaternion_sample if args.mode == "vector" else build_matrix_sample
    samples = [build(lms, pairs) for lms in sets]
    if args.out:
        write_quaternions_csv(args.out, samples)
    else:
        buf = io.StringIO()
        _write_quaternions(buf, samples)
        sys.stdout.write(buf.getvalue())
    return 0


def _write_quaternions(fh, samples):
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(["specimen", "row", "column", "a", "b", "c", "d"])
    for s in samples:
        for i in range(s.data.shape[0]):
            for c in range(s.data.shape[1]):
                w.writerow([s.specimen, i + 1, c + 1] + [repr(float(v)) for v in s.data[i, c]])


def _grid(text):
    """``start:stop:num`` to a linearly spaced grid (``num = 0`` is empty)."""
    try:
        start, stop, num = text.split(":")
        start, stop, num = float(start), float(stop), int(num)
    except ValueError:
        raise ConfigurationError(f"--grid expects START:STOP:NUM, got {text!r}") from None
    if num < 0 or (num > 1 and not stop > start):
        raise ConfigurationError("--grid needs NUM >= 0 and STOP > START")
    return np.linspace(start, stop, num)


def _cmd_plot(args, opts):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    if args.kind == "density":
        inst = _instance(opts)
        grid = _grid(_require(opts, "grid"))
        names = inst.slot_names()
        var = args.var or names[0]
        if var not in names:
            raise ConfigurationError(f"--var must be one of {', '.join(names)}")
        fixed = _coerce_entry(inst, _point_mapping(args.point))
        w.writerow(["x", "logpdf", "density"])
        if len(grid):
            j = names.index(var)
            shape = inst.slot_shape(j)
            slots = []
            for i, name in enumerate(names):
                if i == j:
                    s = np.zeros((len(grid),) + shape)
                    s.reshape(len(grid), -1)[:, 0] = grid
                else:
                    if name not in fixed:
                        raise ConfigurationError(f"--point {name}=... is required")
                    s = np.repeat(inst._coerce(i, fixed[name], False), len(grid), axis=0)
                slots.append(s)
            pt = FamilyPoint(tuple(slots), batched=True)
            with np.errstate(all="ignore"):
                lp = np.atleast_1d(log_density(inst, pt, check=False))
            for x, v in zip(grid, lp):
                w.writerow([repr(float(x)), repr(float(v)), repr(float(np.exp(v)))])
    elif args.kind == "profile":
        prob = _fit_problem(opts)
        grid = _grid(_require(opts, "grid"))
        if args.params:
            params = [_float("params", v) for v in args.params.split(",")]
        else:
            params = fit(prob, **_fit_opts(opts)).params
        group = args.group or prob.group_labels()[0]
        w.writerow([group, "loglik"])
        for x, ll in profile(prob, params, group, grid):
            w.writerow([repr(x), repr(ll)])
    else:
        prob = _fit_problem(opts)
        res = fit(prob, **_fit_opts(opts))
        w.writerow(["restart", "iterations", "loglik"] + prob.group_labels())
        for t in res.trace:
            w.writerow([t["restart"], t["iterations"], repr(t["loglik"])]
                       + [repr(v) for v in t["end"]])
    _emit(buf.getvalue(), args.out)
    return 0


# ---------------------------------------------------------------------------
# parser
# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="dadist", description="Matrix variate distributions over R, C, H, O.")
    p.add_argument("--version", action="version", version=f"dadist {__version__}")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    sp = sub.add_parser("logpdf", help="evaluate a log-density")
    _add_instance(sp)
    sp.add_argument("--point", action="append",
                    help="NAME=VALUE; VALUE is a float, c1:c2:.. or @matrix.csv")
    sp.add_argument("--data", help="sample CSV; one log-density per row")
    sp.add_argument("--json", action="store_true", help="JSON output")
    sp.add_argument("--out")
    sp.set_defaults(func=_cmd_logpdf)

    sp = sub.add_parser("sample", help="draw samples to CSV")
    _add_instance(sp)
    sp.add_argument("--count", type=int)
    sp.add_argument("--seed", type=int, help="defaults to DADIST_SEED, then fresh entropy")
    sp.add_argument("--threads", type=int)
    sp.add_argument("--source-kernel", dest="source_kernel",
                    help="source law for kernel-free families")
    sp.add_argument("--out")
    sp.set_defaults(func=_cmd_sample)

    def fit_args(sp):
        sp.add_argument("--config")
        sp.add_argument("--family")
        sp.add_argument("--beta", type=int)
        sp.add_argument("--m", type=int)
        sp.add_argument("--r", type=int)
        sp.add_argument("--data", help="sample CSV (one replicate per row)")
        sp.add_argument("--quaternions", help="quaternion CSV from ingest-landmarks")
        sp.add_argument("--layout", choices=("pooled", "specimen"))
        sp.add_argument("--tie", help="a1..ak (default), free, all or groups like 0|1,2")
        sp.add_argument("--restarts", type=int)
        sp.add_argument("--seed", type=int)
        sp.add_argument("--threads", type=int)
        sp.add_argument("--out")

    sp = sub.add_parser("fit", help="maximum likelihood fit")
    fit_args(sp)
    sp.set_defaults(func=_cmd_fit)

    sp = sub.add_parser("validate", help="run validation suites (JSON report)")
    sp.add_argument("--suite", action="append", choices=list(SUITES) + ["all"],
                    help="repeatable; default all")
    sp.add_argument("--seed", type=int)
    sp.add_argument("--draws", type=int, help="Monte Carlo draws for normalization")
    sp.add_argument("--no-quad", action="store_true", help="skip cubature checks")
    sp.add_argument("--data", help="landmark CSV for the landmarks suite")
    sp.add_argument("--out")
    sp.set_defaults(func=_cmd_validate)

    sp = sub.add_parser("ingest-landmarks", help="landmark CSV to quaternion CSV")
    sp.add_argument("--input", required=True)
    sp.add_argument("--pairs", default="default")
    sp.add_argument("--mode", choices=("vector", "matrix"), default="vector")
    sp.add_argument("--out")
    sp.set_defaults(func=_cmd_ingest)

    sp = sub.add_parser("plot-data", help="CSV series for external plotting")
    sp.add_argument("kind", choices=("density", "profile", "trace"))
    _add_instance(sp)
    for flag in ("--data", "--quaternions", "--tie", "--grid", "--var", "--group",
                 "--params", "--out"):
        sp.add_argument(flag)
    sp.add_argument("--layout", choices=("pooled", "specimen"))
    sp.add_argument("--point", action="append")
    sp.add_argument("--restarts", type=int)
    sp.add_argument("--seed", type=int)
    sp.add_argument("--threads", type=int)
    sp.set_defaults(func=_cmd_plot)
    return p


def run(argv=None) -> int:
    """Run one command; returns the exit status."""
    parser = build_parser()
    try:
        args, extras = parser.parse_known_args(argv)
        indexed = _split_params(extras)
        if indexed and args.command not in ("logpdf", "sample", "plot-data"):
            raise CliError(f"unrecognized arguments: {' '.join(extras)}")
        config = read_config(args.config) if getattr(args, "config", None) else {}
        if args.command == "validate" and not args.suite:
            args.suite = ["all"]
        opts = _merge(args, config, indexed)
        return args.func(args, opts)
    except CliError as exc:
        _error("usage", str(exc))
    except DadistError as exc:
        _error(type(exc).__name__, str(exc), getattr(exc, "predicates", None))
    except OSError as exc:
        _error("OSError", f"{exc.filename or ''}: {exc.strerror or exc}".strip(": "))
    return 1


def _error(kind, message, predicates=None):
    payload = {"error": kind, "message": " ".join(str(message).split())}
    if predicates:
        payload["predicates"] = list(predicates)
    sys.stderr.write(json.dumps(payload) + "\n")


def main(argv=None) -> None:
    sys.exit(run(argv))


if __name__ == "__main__":
    main()
