"""Input signals, datasets and their CSV formats.

DT dataset file: header ``t,u,y``; one row per time index. ``y`` may be left
empty on rows that are not measurement instants (extra input samples).
CT datasets use two files: ``steps.csv`` (``s,xi``: breakpoint s_i and the
level on [s_i, s_{i+1}); the last row closes the signal and must carry xi = 0
or an empty cell) and ``samples.csv`` (``t,y``).
"""
from dataclasses import dataclass, field
import csv
import math
from pathlib import Path

import numpy as np

from .errors import ArgumentError, InputFormatError
from .kernels import Domain


def _frozen_array(x, dtype=float):
    a = np.array(x, dtype=dtype, copy=True)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class StepSignal:
    """u(t) = levels[i] on [breakpoints[i], breakpoints[i+1]), zero elsewhere."""

    breakpoints: np.ndarray
    levels: np.ndarray

    def __post_init__(self):
        s = _frozen_array(self.breakpoints)
        xi = _frozen_array(self.levels)
        if s.ndim != 1 or xi.ndim != 1 or len(s) != len(xi) + 1 or len(xi) < 1:
            raise ArgumentError("StepSignal needs n_s >= 1 levels and n_s + 1 breakpoints")
        if not np.all(np.isfinite(s)) or not np.all(np.isfinite(xi)):
            raise ArgumentError("StepSignal values must be finite")
        if s[0] < 0 or np.any(np.diff(s) <= 0):
            raise ArgumentError("breakpoints must be non-negative and strictly increasing")
        object.__setattr__(self, "breakpoints", s)
        object.__setattr__(self, "levels", xi)

    @property
    def n_steps(self):
        return len(self.levels)

    @property
    def jump_weights(self):
        """Coefficients c_p = xi_{p+1} - xi_p (xi_0 = xi_{n_s+1} = 0), one per breakpoint.

        u(t - s) summed against any kernel section equals
        sum_p c_p * integral_0^{sbar_p(t)} so the representer is a signed sum
        of cumulative integrals; used by the vectorized Gram assembly.
        """
        xi = np.concatenate([[0.0], self.levels, [0.0]])
        return np.diff(xi)

    def as_dict(self):
        return {"kind": "step", "breakpoints": self.breakpoints.tolist(), "levels": self.levels.tolist()}


@dataclass(frozen=True, eq=False)
class DtInput:
    """u_0, ..., u_{N-1}; zero for t < 0 and t >= N."""

    samples: np.ndarray

    def __post_init__(self):
        u = _frozen_array(self.samples)
        if u.ndim != 1 or not np.all(np.isfinite(u)):
            raise ArgumentError("DtInput samples must be a finite 1-D sequence")
        object.__setattr__(self, "samples", u)

    def __len__(self):
        return len(self.samples)

    def as_dict(self):
        return {"kind": "dt", "samples": self.samples.tolist()}


def input_from_dict(d):
    if d["kind"] == "step":
        return StepSignal(d["breakpoints"], d["levels"])
    if d["kind"] == "dt":
        return DtInput(d["samples"])
    raise ArgumentError(f"unknown input kind {d['kind']!r}")


@dataclass(frozen=True, eq=False)
class Dataset:
    domain: Domain
    input: object
    sample_times: np.ndarray
    outputs: np.ndarray
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "domain", Domain(str(self.domain).upper().split(".")[-1]))
        t = _frozen_array(self.sample_times)
        y = _frozen_array(self.outputs)
        if t.ndim != 1 or y.shape != t.shape or len(t) < 1:
            raise ArgumentError("sample_times and outputs must be 1-D of equal length >= 1")
        if np.any(t < 0) or len(np.unique(t)) != len(t):
            raise ArgumentError("sample times must be distinct and non-negative")
        if self.domain is Domain.DT:
            if not isinstance(self.input, DtInput):
                raise ArgumentError("DT dataset requires a DtInput")
            if np.any(t != np.round(t)):
                raise ArgumentError("DT sample times must be integers")
        elif not isinstance(self.input, StepSignal):
            raise ArgumentError("CT dataset requires a StepSignal input")
        object.__setattr__(self, "sample_times", t)
        object.__setattr__(self, "outputs", y)

    @property
    def n(self):
        return len(self.sample_times)


def index_set(indices, n):
    """Validated, strictly increasing 0-based index array into 0..n-1."""
    idx = np.asarray(indices, dtype=np.int64)
    if idx.ndim != 1 or len(idx) == 0:
        raise ArgumentError("index set must be non-empty")
    if np.any(np.diff(idx) <= 0) or idx[0] < 0 or idx[-1] >= n:
        raise ArgumentError("index set must be strictly increasing and within bounds")
    return idx


# -- evaluation ---------------------------------------------------------------
def eval_input(inp, t):
    """Pointwise input value, zero before the signal starts."""
    t = np.asarray(t, dtype=float)
    if isinstance(inp, StepSignal):
        s = inp.breakpoints
        i = np.searchsorted(s, t, side="right") - 1
        inside = (i >= 0) & (i < inp.n_steps)
        out = np.where(inside, inp.levels[np.clip(i, 0, inp.n_steps - 1)], 0.0)
    else:
        u = inp.samples
        ti = np.round(t).astype(np.int64)
        ok = (ti >= 0) & (ti < len(u))
        out = np.where(ok, u[np.clip(ti, 0, max(len(u) - 1, 0))], 0.0)
    return float(out) if out.ndim == 0 else out


def toeplitz(inp, n):
    """Lower-triangular Toeplitz matrix [T_u]_{ij} = u_{i-j} (n x n)."""
    u = np.zeros(n)
    m = min(n, len(inp.samples))
    u[:m] = inp.samples[:m]
    i, j = np.indices((n, n))
    d = i - j
    return np.where(d >= 0, u[np.clip(d, 0, n - 1)], 0.0)


def sbar(step, i, tau):
    """max(tau - s_i, 0)."""
    if not 0 <= i <= step.n_steps:
        raise ArgumentError(f"breakpoint index {i} out of range 0..{step.n_steps}")
    return np.maximum(np.asarray(tau, dtype=float) - step.breakpoints[i], 0.0)


def sbar_matrix(step, taus):
    """[sbar_p(tau_k)] for all breakpoints p, shape (len(taus), n_s + 1)."""
    taus = np.asarray(taus, dtype=float)
    return np.maximum(taus[:, None] - step.breakpoints[None, :], 0.0)


# -- CSV I/O --------------------------------------------------------------------
def _read_rows(path, required):
    path = Path(path)
    try:
        fh = open(path, newline="", encoding="utf-8")
    except OSError as exc:
        raise InputFormatError(f"cannot open: {exc.strerror}", path=path) from exc
    with fh:
        reader = csv.reader(fh)
        try:
            header = [h.strip() for h in next(reader)]
        except StopIteration:
            raise InputFormatError("empty file", path=path) from None
        for col in required:
            if col not in header:
                raise InputFormatError(f"missing column in header {header}", path=path, row=1, column=col)
        pos = {c: header.index(c) for c in header}
        rows = []
        for lineno, rec in enumerate(reader, start=2):
            if not rec or all(not c.strip() for c in rec):
                continue
            if len(rec) != len(header):
                raise InputFormatError(
                    f"expected {len(header)} fields, got {len(rec)}", path=path, row=lineno
                )
            rows.append((lineno, {c: rec[pos[c]].strip() for c in header}))
    return path, rows


def _num(path, lineno, col, text, allow_empty=False):
    if text == "" and allow_empty:
        return None
    try:
        v = float(text)
    except ValueError:
        raise InputFormatError(f"not a number: {text!r}", path=path, row=lineno, column=col) from None
    if not math.isfinite(v):
        raise InputFormatError(f"non-finite value {text!r}", path=path, row=lineno, column=col)
    return v


def load_dt_csv(path):
    path, rows = _read_rows(path, ("t", "u", "y"))
    if not rows:
        raise InputFormatError("no data rows", path=path)
    ts, us, ys = [], [], []
    for lineno, r in rows:
        t = _num(path, lineno, "t", r["t"])
        if t != round(t) or t < 0:
            raise InputFormatError("t must be a non-negative integer", path=path, row=lineno, column="t")
        ts.append(int(t))
        us.append(_num(path, lineno, "u", r["u"]))
        ys.append(_num(path, lineno, "y", r["y"], allow_empty=True))
    if ts != list(range(len(ts))):
        raise InputFormatError("t must run 0, 1, 2, ... in row order", path=path, column="t")
    times = [t for t, y in zip(ts, ys) if y is not None]
    outs = [y for y in ys if y is not None]
    if not times:
        raise InputFormatError("no output samples", path=path, column="y")
    return Dataset(Domain.DT, DtInput(us), times, outs)


def load_ct_csv(steps_path, samples_path):
    spath, srows = _read_rows(steps_path, ("s", "xi"))
    if len(srows) < 2:
        raise InputFormatError("need at least two breakpoint rows", path=spath)
    s, xi = [], []
    for k, (lineno, r) in enumerate(srows):
        s.append(_num(spath, lineno, "s", r["s"]))
        last = k == len(srows) - 1
        v = _num(spath, lineno, "xi", r["xi"], allow_empty=last)
        if last:
            if v not in (None, 0.0):
                raise InputFormatError("final breakpoint row must have xi = 0 or empty", path=spath, row=lineno, column="xi")
        else:
            xi.append(v)
    if s[0] < 0 or any(b <= a for a, b in zip(s, s[1:])):
        raise InputFormatError("breakpoints must be non-negative and increasing", path=spath, column="s")
    ypath, yrows = _read_rows(samples_path, ("t", "y"))
    if not yrows:
        raise InputFormatError("no data rows", path=ypath)
    ts = [_num(ypath, ln, "t", r["t"]) for ln, r in yrows]
    ys = [_num(ypath, ln, "y", r["y"]) for ln, r in yrows]
    if ts[0] < 0 or any(b <= a for a, b in zip(ts, ts[1:])):
        raise InputFormatError("sample times must be non-negative and increasing", path=ypath, column="t")
    return Dataset(Domain.CT, StepSignal(s, xi), ts, ys)


def load_response_csv(path):
    """Sampled impulse response (columns t,g)."""
    path, rows = _read_rows(path, ("t", "g"))
    if not rows:
        raise InputFormatError("no data rows", path=path)
    t = np.array([_num(path, ln, "t", r["t"]) for ln, r in rows])
    g = np.array([_num(path, ln, "g", r["g"]) for ln, r in rows])
    return t, g


def fmt(x):
    """17 significant digits; round-trips binary64 exactly."""
    return format(float(x), ".17g")


def write_csv(path, header, columns):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    cols = [np.asarray(c) for c in columns]
    with open(path, "w", newline="", encoding="utf-8") as fh:
        fh.write(",".join(header) + "\n")
        for row in zip(*cols):
            fh.write(",".join(_cell(v) for v in row) + "\n")


def _cell(v):
    if isinstance(v, (str, np.str_)):
        return str(v)
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if v is None:
        return ""
    return fmt(v)


def save_dt_csv(path, dataset, horizon=None):
    u = dataset.input.samples
    n = max(len(u), int(dataset.sample_times.max()) + 1) if horizon is None else horizon
    uu = np.zeros(n)
    uu[: min(n, len(u))] = u[:n]
    yy = [None] * n
    for t, y in zip(dataset.sample_times.astype(int), dataset.outputs):
        yy[t] = y
    write_csv(path, ["t", "u", "y"], [np.arange(n), uu, np.array(yy, dtype=object)])


def save_ct_csv(steps_path, samples_path, dataset):
    step = dataset.input
    xi = list(step.levels) + [0.0]
    write_csv(steps_path, ["s", "xi"], [step.breakpoints, np.array(xi)])
    write_csv(samples_path, ["t", "y"], [dataset.sample_times, dataset.outputs])
