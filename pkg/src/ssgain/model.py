"""Identified model: g* = sum_i x_i phi_i, its responses, predictions and export."""
from dataclasses import dataclass, field
import json
import math
from pathlib import Path

import numpy as np

from . import kernels as K
from ._ctblock import ct_block, ct_nubar_col
from .errors import ArgumentError, MetricError
from .gram import GramSystem, build_gram_ct, build_gram_dt, cross_gram, phi0_values, representers_combo
from .kernels import Domain, KernelParams
from .signals import input_from_dict, sbar_matrix
from .solver import GainConstraint, Loss, solve_general

CT_GRID_POINTS = 500


@dataclass(eq=False)
class IdentifiedModel:
    kernel: KernelParams
    input: object
    sample_times: np.ndarray
    x: np.ndarray
    lam: float | None = None
    loss: dict | None = None
    constraint: dict | None = None
    meta: dict = field(default_factory=dict)
    _gram: GramSystem | None = None
    _gain: float | None = None

    @classmethod
    def from_solution(cls, gram, solution, lam=None, loss=None, constraint=None, meta=None):
        m = cls(gram.kernel, gram.input, np.array(gram.sample_times), np.array(solution.x),
                lam=lam, loss=loss, constraint=constraint, meta=dict(meta or {}), _gram=gram)
        return m

    @property
    def gram(self):
        if self._gram is None:
            if self.kernel.domain is Domain.DT:
                self._gram = build_gram_dt(self.kernel, self.input, sample_times=self.sample_times)
            else:
                self._gram = build_gram_ct(self.kernel, self.input, self.sample_times)
        return self._gram

    @property
    def achieved_gain(self):
        """a0^T x."""
        if self._gain is None:
            self._gain = float(self.gram.a0 @ self.x)
        return self._gain

    def horizon(self, tol=1e-10):
        """Default response horizon: last sample plus alpha**(T/2) < tol."""
        T = K.tail_horizon(self.kernel, tol)
        last = float(np.max(self.sample_times, initial=0.0))
        if self.kernel.domain is Domain.DT:
            return int(last) + int(T)
        return last + T


def fit(dataset, kernel, lam, loss=Loss(), constraint=GainConstraint(), gram=None, **solver_kw):
    """Build the Gram system (unless given), solve, and wrap the result."""
    from .gram import build_gram

    gram = build_gram(kernel, dataset) if gram is None else gram
    sol = solve_general(gram, dataset.outputs, loss, lam, constraint, **solver_kw)
    loss_d = {"kind": loss.kind, "sigma": loss.sigma}
    model = IdentifiedModel.from_solution(gram, sol, lam=float(lam), loss=loss_d,
                                          constraint=constraint.as_dict())
    return model, sol


def impulse_response(model, t):
    t = np.atleast_1d(np.asarray(t, dtype=float))
    if np.any(t < 0):
        raise ArgumentError("impulse response needs t >= 0")
    g = model.x[0] * phi0_values(model.kernel, t) if model.x[0] != 0 else np.zeros_like(t)
    return g + representers_combo(model.kernel, model.input, model.sample_times, model.x[1:], t)


def step_response(model, grid):
    """Running gain: sum_{s<=t} g(s) (DT) or integral_0^t g(s) ds (CT)."""
    grid = np.atleast_1d(np.asarray(grid, dtype=float))
    if np.any(grid < 0) or np.any(np.diff(grid) < 0):
        raise ArgumentError("step-response grid must be sorted and non-negative")
    if len(grid) == 0:
        return grid.copy()
    kp = model.kernel
    if kp.domain is Domain.DT:
        H = int(math.floor(grid[-1])) + 1
        s = np.cumsum(impulse_response(model, np.arange(H)))
        return s[np.floor(grid).astype(int)]
    # CT, closed form: x0 * nu_bar(t) + sum_i c_i sum_p w_p nu(t, sbar_p(tau_i))
    args = (kp.code, kp.log_alpha, kp.log_gamma)
    one = np.ones(1)
    out = model.x[0] * ct_nubar_col(*args, grid[:, None], one)
    if model.x.size > 1:
        sb = sbar_matrix(model.input, model.sample_times)
        out = out + ct_block(*args, grid[:, None], one, sb, model.input.jump_weights) @ model.x[1:]
    return out


def _gl_panels(edges, order=16):
    nodes, weights = np.polynomial.legendre.leggauss(order)
    a, b = edges[:-1, None], edges[1:, None]
    t = (0.5 * (b - a) * nodes + 0.5 * (a + b)).ravel()
    w = (0.5 * (b - a) * weights).ravel()
    return t, w


def numeric_gain(model, tol=1e-14):
    """ell_0(g*) by direct summation (DT) or composite Gauss-Legendre quadrature (CT).

    Truncated where the kernel envelope alpha**(t/2) drops below ``tol``.
    """
    kp = model.kernel
    T = model.horizon(tol)
    if kp.domain is Domain.DT:
        return float(np.sum(impulse_response(model, np.arange(T + 1))))
    # representers are piecewise smooth with kinks at tau_i - s_p; split panels there
    kinks = (model.sample_times[:, None] - model.input.breakpoints[None, :]).ravel()
    kinks = kinks[(kinks > 0) & (kinks < T)]
    width = 0.5 / max(-kp.log_alpha, 1e-3)
    base = np.linspace(0.0, T, int(math.ceil(T / width)) + 1)
    edges = np.unique(np.concatenate([base, kinks]))
    t, w = _gl_panels(edges)
    return float(w @ impulse_response(model, t))


def predict(model, times):
    """Noiseless outputs at ``times``; training instants reuse the rows of A."""
    times = np.atleast_1d(np.asarray(times, dtype=float))
    gram = model.gram
    if times.shape == gram.sample_times.shape and np.array_equal(times, gram.sample_times):
        return gram.A @ model.x
    lookup = {float(t): i for i, t in enumerate(gram.sample_times)}
    out = np.empty(len(times))
    fresh = [j for j, t in enumerate(times) if float(t) not in lookup]
    for j, t in enumerate(times):
        if float(t) in lookup:
            out[j] = gram.A[lookup[float(t)]] @ model.x
    if fresh:
        out[fresh] = cross_gram(gram, times[fresh]) @ model.x
    return out


def fit_metric(g_est, g_true):
    """100 * (1 - |g_est - g_true| / |g_true|)."""
    g_est = np.asarray(g_est, dtype=float)
    g_true = np.asarray(g_true, dtype=float)
    if g_est.shape != g_true.shape:
        raise ArgumentError("fit_metric needs responses on the same grid")
    nt = float(np.linalg.norm(g_true))
    if nt == 0.0:
        raise MetricError("fit undefined: true response is identically zero")
    return 100.0 * (1.0 - float(np.linalg.norm(g_est - g_true)) / nt)


def default_grid(model):
    if model.kernel.domain is Domain.DT:
        return np.arange(model.horizon() + 1, dtype=float)
    return np.linspace(0.0, model.horizon(), CT_GRID_POINTS)


# -- export -------------------------------------------------------------------
def _enc(obj, indent=0):
    pad = "  " * (indent + 1)
    end = "  " * indent
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{pad}{json.dumps(str(k))}: {_enc(v, indent + 1)}" for k, v in obj.items()]
        return "{\n" + ",\n".join(items) + "\n" + end + "}"
    if isinstance(obj, (list, tuple, np.ndarray)):
        seq = list(obj)
        if not seq:
            return "[]"
        if all(not isinstance(v, (dict, list, tuple, np.ndarray)) for v in seq):
            return "[" + ", ".join(_enc(v, indent + 1) for v in seq) + "]"
        return "[\n" + ",\n".join(pad + _enc(v, indent + 1) for v in seq) + "\n" + end + "]"
    if obj is None or isinstance(obj, (bool, np.bool_)):
        return json.dumps(None if obj is None else bool(obj))
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        if math.isfinite(v):
            return format(v, ".17g")
        return json.dumps("nan" if math.isnan(v) else ("inf" if v > 0 else "-inf"))
    return json.dumps(obj)


def dumps(obj):
    """JSON with every float at 17 significant digits; non-finite floats become strings."""
    return _enc(obj) + "\n"


def write_json(path, obj):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(dumps(obj), encoding="utf-8")


def model_to_dict(model):
    return {
        "kernel": model.kernel.as_dict(),
        "input": model.input.as_dict(),
        "sample_times": model.sample_times,
        "x": model.x,
        "achieved_gain": model.achieved_gain,
        "lambda": model.lam,
        "loss": model.loss,
        "constraint": model.constraint,
        "meta": model.meta,
    }


def model_from_dict(d):
    return IdentifiedModel(
        K.KernelParams.from_dict(d["kernel"]),
        input_from_dict(d["input"]),
        np.array(d["sample_times"], dtype=float),
        np.array(d["x"], dtype=float),
        lam=d.get("lambda"),
        loss=d.get("loss"),
        constraint=d.get("constraint"),
        meta=d.get("meta") or {},
        _gain=float(d["achieved_gain"]),
    )


def save_model(path, model):
    write_json(path, model_to_dict(model))


def load_model(path):
    return model_from_dict(json.loads(Path(path).read_text(encoding="utf-8")))
