"""Reproduction harness: random stable systems, simulation, Example 1, Monte Carlo.

Everything random is driven by explicit seeds; trial seeds are spawned from a
master seed with ``numpy.random.SeedSequence`` so each trial is independent of
the worker that runs it.
"""
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
import math
import time

import numpy as np
import scipy.linalg as sla

from ._accel import thread_cap
from .errors import ArgumentError, ConvergenceError
from .gram import build_gram
from .kernels import Domain, KernelParams
from .model import fit, fit_metric, impulse_response, step_response
from .signals import Dataset, DtInput, StepSignal, fmt, write_csv
from .solver import GainConstraint, Loss
from .tuning import SearchSpace, tune

TAIL_TOL = 1e-10


@dataclass(frozen=True)
class RandomSystemSpec:
    n: int
    r: float
    seed: int = 0

    def __post_init__(self):
        if int(self.n) < 1 or not 0 < self.r < 1:
            raise ArgumentError("need order n >= 1 and spectral radius r in (0, 1)")


@dataclass(frozen=True)
class NoiseSpec:
    """White Gaussian noise scaled to ``snr_db`` on the realized sequence, or a fixed ``std``."""

    snr_db: float | None = None
    seed: int = 0
    std: float | None = None


@dataclass(frozen=True)
class LtiSystem:
    A: np.ndarray
    B: np.ndarray
    C: np.ndarray
    D: float
    g: np.ndarray  # g_0 = D, g_t = C A^(t-1) B, truncated at the tail tolerance

    @property
    def gain(self):
        """Steady-state gain C (I - A)^-1 B + D."""
        n = len(self.A)
        return float(self.C @ np.linalg.solve(np.eye(n) - self.A, self.B)) + self.D


def gen_system(spec, max_len=1_000_000):
    rng = np.random.default_rng(spec.seed)
    n = int(spec.n)
    A = rng.standard_normal((n, n))
    A *= spec.r / np.max(np.abs(np.linalg.eigvals(A)))
    B = rng.standard_normal(n)
    C = rng.standard_normal(n)
    W = sla.solve_discrete_lyapunov(A, np.outer(B, B))
    C = C / math.sqrt(float(C @ W @ C))
    g = [0.0]
    c = C.copy()
    while True:
        g.append(float(c @ B))
        c = c @ A
        if math.sqrt(max(float(c @ W @ c), 0.0)) < TAIL_TOL:
            break
        if len(g) > max_len:
            raise ConvergenceError("impulse response tail did not decay", residual=float(c @ W @ c))
    return LtiSystem(A, B, C, 0.0, np.array(g))


def add_noise(y, noise):
    """Return (noisy y, realized SNR in dB)."""
    y = np.asarray(y, dtype=float)
    if noise is None or (noise.snr_db is None and noise.std is None):
        return y.copy(), math.inf
    w = np.random.default_rng(noise.seed).standard_normal(len(y))
    ps = float(np.mean(y * y))
    if noise.std is not None:
        w *= noise.std
    elif ps > 0:
        w *= math.sqrt(ps / 10.0 ** (noise.snr_db / 10.0) / float(np.mean(w * w)))
    else:
        w[:] = 0.0
    pw = float(np.mean(w * w))
    snr = 10.0 * math.log10(ps / pw) if pw > 0 and ps > 0 else (math.inf if pw == 0 else -math.inf)
    return y + w, snr


def simulate(system, u, n_samples, noise=None):
    """Dataset of y_t = sum_s g_s u_(t-s) + w_t, t = 0..n_samples-1, from rest."""
    u = np.asarray(u, dtype=float)
    uu = np.zeros(n_samples)
    uu[: min(len(u), n_samples)] = u[:n_samples]
    clean = np.convolve(uu, system.g[:n_samples])[:n_samples]
    y, snr = add_noise(clean, noise)
    meta = {"realized_snr_db": snr, "noise_power": float(np.mean((y - clean) ** 2))}
    return Dataset(Domain.DT, DtInput(uu), np.arange(n_samples), y, meta)


# -- Example 1: G(s) = (s + 2)/(s^2 + s + 2) ------------------------------------
_W = math.sqrt(7.0) / 2.0


def example1_impulse(t):
    t = np.asarray(t, dtype=float)
    return np.where(t >= 0, np.exp(-t / 2) * (np.cos(_W * t) + 1.5 / _W * np.sin(_W * t)), 0.0)


def example1_step(t):
    t = np.asarray(t, dtype=float)
    return np.where(t >= 0, 1.0 - np.exp(-t / 2) * (np.cos(_W * t) - 0.5 / _W * np.sin(_W * t)), 0.0)


def example1_system(t_grid):
    """(impulse, step) samples of the Example 1 system on ``t_grid``."""
    return example1_impulse(t_grid), example1_step(t_grid)


def switching_input(seed, horizon=100.0, mean_dwell=5.0):
    """+-1 pulse signal that flips sign after exponential dwell times."""
    rng = np.random.default_rng(seed)
    s = [0.0]
    while True:
        nxt = s[-1] + rng.exponential(mean_dwell)
        if nxt >= horizon:
            break
        s.append(nxt)
    s.append(horizon)
    first = 1.0 if rng.random() < 0.5 else -1.0
    levels = first * (-1.0) ** np.arange(len(s) - 1)
    return StepSignal(s, levels)


def example1_dataset(seed, snr_db=20.0, horizon=100.0, rate=2.0, mean_dwell=5.0):
    ss = np.random.SeedSequence(seed).spawn(2)
    step = switching_input(int(ss[0].generate_state(1)[0]), horizon, mean_dwell)
    t = np.linspace(0.0, horizon, int(round(horizon * rate)) + 1)
    # exact output: superposition of shifted step responses at the jumps
    clean = np.zeros_like(t)
    for s, w in zip(step.breakpoints, step.jump_weights):
        clean += w * example1_step(t - s)
    y, snr = add_noise(clean, NoiseSpec(snr_db, int(ss[1].generate_state(1)[0])))
    return Dataset(Domain.CT, step, t, y, {"realized_snr_db": snr})


EXAMPLE1_SPACE = SearchSpace("TC", lam=(1e-6, 1e2, 9), alpha=(0.1, 0.9, 9))


def example1_trial(seed, space=EXAMPLE1_SPACE, delta=1.0, grid=None, methods=("constrained", "ridge"),
                   timing=False):
    data = example1_dataset(seed)
    grid = np.linspace(0.0, 30.0, 500) if grid is None else grid
    truth = example1_impulse(grid)
    rows = []
    for method in methods:
        t0 = time.perf_counter()
        cons = GainConstraint.exact(delta) if method == "constrained" else GainConstraint()
        res = tune(data, space, constraint=cons, workers=1)
        kp = res.best.kernel(space.family, Domain.CT)
        model, _ = fit(data, kp, res.best.lam, constraint=cons)
        est = impulse_response(model, grid)
        rows.append({
            "method": method, "fit_pct": fit_metric(est, truth),
            "gain_err": model.achieved_gain - 1.0, "achieved_gain": model.achieved_gain,
            "theta": res.best.as_dict(), "snr_db": data.meta["realized_snr_db"],
            "seconds": time.perf_counter() - t0 if timing else math.nan, "model": model,
        })
    return rows


# -- Monte Carlo ----------------------------------------------------------------
MC_SPACE = SearchSpace("DC", lam=(1e-3, 1e2, 6), alpha=(0.6, 0.96, 7), gamma=(0.8, 1.2, 3))


@dataclass
class MonteCarloConfig:
    trials: int = 50
    n_range: tuple = (8, 16)
    radii: tuple = (0.8, 0.9, 0.95)
    n_d: int = 200
    snr_db: tuple = (20.0, 10.0, 5.0)
    seed: int = 0
    space: SearchSpace = field(default_factory=lambda: MC_SPACE)
    train_fraction: float = 0.8
    methods: tuple = ("constrained", "ridge")
    timing: bool = False
    workers: int | None = None

    @classmethod
    def from_dict(cls, d):
        kw = dict(d)
        if "space" in kw and isinstance(kw["space"], dict):
            kw["space"] = SearchSpace.from_dict(kw["space"])
        for k in ("n_range", "radii", "snr_db", "methods"):
            if k in kw:
                v = kw[k]
                kw[k] = tuple(v) if isinstance(v, (list, tuple)) else (v,)
        return cls(**{k: v for k, v in kw.items() if k in cls.__dataclass_fields__})


def _trial_seeds(master, trials):
    return [int(s.generate_state(1)[0]) for s in np.random.SeedSequence(master).spawn(trials)]


def mc_trial(cfg, trial, seed):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(cfg.n_range[0], cfg.n_range[1] + 1))
    r = float(cfg.radii[int(rng.integers(len(cfg.radii)))])
    sys_seed, in_seed, noise_seed = (int(v) for v in rng.integers(0, 2**63 - 1, size=3))
    system = gen_system(RandomSystemSpec(n, r, sys_seed))
    u = np.random.default_rng(in_seed).standard_normal(cfg.n_d)
    L = max(len(system.g), cfg.n_d)
    grid = np.arange(L, dtype=float)
    truth = np.zeros(L)
    truth[: len(system.g)] = system.g
    true_gain = system.gain
    rows = []
    for k, snr in enumerate(cfg.snr_db):
        snr = None if snr is None or not math.isfinite(snr) else float(snr)
        data = simulate(system, u, cfg.n_d, NoiseSpec(snr, noise_seed + k))
        for method in cfg.methods:
            t0 = time.perf_counter()
            cons = GainConstraint.exact(true_gain) if method == "constrained" else GainConstraint()
            res = tune(data, cfg.space, constraint=cons, train_fraction=cfg.train_fraction, workers=1)
            model, _ = fit(data, res.best.kernel(cfg.space.family, Domain.DT), res.best.lam,
                           constraint=cons)
            est = impulse_response(model, grid)
            rows.append({
                "trial": trial, "method": method, "snr_db": math.inf if snr is None else snr,
                "n": n, "r": r, "fit_pct": fit_metric(est, truth),
                "gain_err": model.achieved_gain - true_gain,
                "seconds": time.perf_counter() - t0 if cfg.timing else math.nan,
            })
    return rows


def _pmap(fn, items, workers):
    workers = workers or thread_cap()
    if workers > 1 and len(items) > 1:
        with ThreadPoolExecutor(workers) as ex:
            return list(ex.map(lambda a: fn(*a), items))
    return [fn(*a) for a in items]


def monte_carlo(cfg):
    seeds = _trial_seeds(cfg.seed, cfg.trials)
    batches = _pmap(lambda i, s: mc_trial(cfg, i, s), list(enumerate(seeds)), cfg.workers)
    return [row for batch in batches for row in batch]


def example1_suite(seeds=20, master=0, timing=False, workers=None):
    trial_seeds = _trial_seeds(master, seeds)

    def one(i, s):
        return [{"trial": i, "n": 2, "r": math.nan, **{k: v for k, v in row.items() if k != "model"}}
                for row in example1_trial(s, timing=timing)]

    batches = _pmap(one, list(enumerate(trial_seeds)), workers)
    return [row for batch in batches for row in batch]


RESULT_COLUMNS = ["trial", "method", "snr_db", "n", "r", "fit_pct", "gain_err", "seconds"]


def write_results(path, rows):
    write_csv(path, RESULT_COLUMNS, [[row[c] for row in rows] for c in RESULT_COLUMNS])


def summarize(rows):
    """Median and quartiles of fit and |gain error| per (method, snr)."""
    out = {}
    keys = sorted({(r["method"], r["snr_db"]) for r in rows}, key=lambda k: (k[0], -k[1]))
    for method, snr in keys:
        sel = [r for r in rows if r["method"] == method and r["snr_db"] == snr]
        fits = np.array([r["fit_pct"] for r in sel])
        gerr = np.abs(np.array([r["gain_err"] for r in sel]))
        q = lambda v: [float(x) for x in np.percentile(v, [25, 50, 75])]
        f25, f50, f75 = q(fits)
        g25, g50, g75 = q(gerr)
        out[f"{method}@{fmt(snr)}dB"] = {
            "method": method, "snr_db": snr, "count": len(sel),
            "fit_median": f50, "fit_q25": f25, "fit_q75": f75,
            "abs_gain_err_median": g50, "abs_gain_err_q25": g25, "abs_gain_err_q75": g75,
        }
    return out
