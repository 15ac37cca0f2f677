"""Hold-out hyperparameter selection.

v(theta) = mean over validation instants of (y - prediction)^2, with the model
fitted on the chronologically first part of the data. The Gram system of every
instant is built once per kernel hyperparameter and then restricted, so the
lambda axis of the search costs one solve per candidate.
"""
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
import math

import numpy as np

from ._accel import thread_cap
from .errors import ArgumentError, ParameterDomainError, SsgainError, TuningError
from .gram import build_gram
from .kernels import Family, KernelParams
from .signals import fmt, write_csv
from .solver import GainConstraint, Loss, solve_general


@dataclass(frozen=True)
class Theta:
    lam: float
    alpha: float
    gamma: float | None = None

    def kernel(self, family, domain):
        return KernelParams(family, self.alpha, self.gamma, domain)

    def key(self):
        return (self.lam, self.alpha, -math.inf if self.gamma is None else self.gamma)

    def as_dict(self):
        return {"lambda": self.lam, "alpha": self.alpha, "gamma": self.gamma}


@dataclass(frozen=True)
class SearchSpace:
    family: str = "TC"
    lam: tuple = (1e-6, 1e2, 9)
    alpha: tuple = (0.5, 0.98, 10)
    gamma: tuple = (0.8, 1.2, 5)
    kind: str = "grid"
    n_random: int = 50
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "family", Family(str(self.family).upper()))
        if self.kind not in ("grid", "random"):
            raise ArgumentError(f"unknown search kind {self.kind!r}")
        for name in ("lam", "alpha", "gamma"):
            lo, hi, cnt = getattr(self, name)
            lo, hi, cnt = float(lo), float(hi), int(cnt)
            if lo > hi or cnt < 1 or (cnt == 1 and lo != hi):
                raise ArgumentError(f"{name} range must be (lo <= hi, count >= 2) or a singleton")
            object.__setattr__(self, name, (lo, hi, cnt))
        if not self.lam[0] > 0:
            raise ArgumentError("lambda range must be positive")
        if not (0 < self.alpha[0] and self.alpha[1] < 1):
            raise ParameterDomainError("alpha range must lie in (0, 1)")

    @classmethod
    def singleton(cls, family, lam, alpha, gamma=None):
        g = (gamma, gamma, 1) if gamma is not None else (0.8, 1.2, 5)
        return cls(family, (lam, lam, 1), (alpha, alpha, 1), g)

    @staticmethod
    def _axis(lo, hi, cnt, log=False):
        if cnt == 1:
            return np.array([lo])
        return np.geomspace(lo, hi, cnt) if log else np.linspace(lo, hi, cnt)

    def candidates(self, domain):
        """Candidate list; DC gammas outside the kernel domain for a given alpha are skipped."""
        dc = self.family is Family.DC
        if self.kind == "grid":
            lams = self._axis(*self.lam, log=True)
            alphas = self._axis(*self.alpha)
            gammas = self._axis(*self.gamma) if dc else [None]
            raw = [(lm, a, g) for a in alphas for g in gammas for lm in lams]
        else:
            rng = np.random.default_rng(self.seed)
            raw = []
            for _ in range(self.n_random):
                lm = math.exp(rng.uniform(math.log(self.lam[0]), math.log(self.lam[1])))
                a = rng.uniform(self.alpha[0], self.alpha[1])
                g = rng.uniform(self.gamma[0], self.gamma[1]) if dc else None
                raw.append((lm, a, g))
        out = []
        for lm, a, g in raw:
            try:
                KernelParams(self.family, float(a), None if g is None else float(g), domain)
            except ParameterDomainError:
                continue
            out.append(Theta(float(lm), float(a), None if g is None else float(g)))
        if not out:
            raise ArgumentError("search space has no admissible candidate")
        return out

    def as_dict(self):
        return {"family": self.family.value, "lambda": list(self.lam), "alpha": list(self.alpha),
                "gamma": list(self.gamma), "kind": self.kind, "n_random": self.n_random,
                "seed": self.seed}

    @classmethod
    def from_dict(cls, d):
        kw = {k: d[k] for k in ("family", "alpha", "gamma", "kind", "n_random", "seed") if k in d}
        if "lambda" in d:
            kw["lam"] = tuple(d["lambda"])
        for k in ("alpha", "gamma"):
            if k in kw:
                kw[k] = tuple(kw[k])
        return cls(**kw)


def split(dataset, train_fraction):
    """Chronological hold-out split: first ceil(f * n) instants train, the rest validate."""
    if not 0 < train_fraction < 1:
        raise ArgumentError("train_fraction must lie in (0, 1)")
    n = dataset.n
    order = np.argsort(dataset.sample_times, kind="stable")
    n_train = int(math.ceil(train_fraction * n - 1e-12))
    if n_train >= n:
        raise ArgumentError(f"validation set would be empty (n={n}, fraction={train_fraction})")
    return np.sort(order[:n_train]), np.sort(order[n_train:])


def _score(full_gram, y, parts, lam, loss, constraint):
    train, val = parts
    tg = full_gram.restrict(train)
    sol = solve_general(tg, y[train], loss, lam, constraint)
    cols = np.concatenate([[0], train + 1])
    pred = full_gram.phi[np.ix_(val + 1, cols)] @ sol.x
    r = y[val] - pred
    return float(np.mean(r * r))


def validation_score(theta, dataset, parts, family="TC", loss=Loss(), constraint=GainConstraint()):
    """Mean squared validation prediction error of the model fitted on the train part."""
    gram = build_gram(theta.kernel(family, dataset.domain), dataset)
    return _score(gram, np.asarray(dataset.outputs), parts, theta.lam, loss, constraint)


@dataclass
class TuneResult:
    best: Theta
    best_score: float
    table: list
    diagnostics: list = field(default_factory=list)


def tune(dataset, space, loss=Loss(), constraint=GainConstraint(), train_fraction=0.8, workers=None):
    cands = space.candidates(dataset.domain)
    parts = split(dataset, train_fraction)
    y = np.asarray(dataset.outputs)
    groups = {}
    for i, th in enumerate(cands):
        groups.setdefault((th.alpha, th.gamma), []).append(i)
    scores = [math.nan] * len(cands)
    diags = [None] * len(cands)

    def run(key):
        alpha, gamma = key
        try:
            gram = build_gram(KernelParams(space.family, alpha, gamma, dataset.domain), dataset)
        except SsgainError as exc:
            return [(i, math.nan, f"{type(exc).__name__}: {exc}") for i in groups[key]]
        res = []
        for i in groups[key]:
            try:
                res.append((i, _score(gram, y, parts, cands[i].lam, loss, constraint), None))
            except (SsgainError, np.linalg.LinAlgError) as exc:
                res.append((i, math.nan, f"{type(exc).__name__}: {exc}"))
        return res

    n_workers = workers or thread_cap()
    keys = list(groups)
    if n_workers > 1 and len(keys) > 1:
        with ThreadPoolExecutor(n_workers) as ex:
            batches = list(ex.map(run, keys))
    else:
        batches = [run(k) for k in keys]
    for batch in batches:
        for i, s, d in batch:
            scores[i], diags[i] = s, d
    ok = [i for i in range(len(cands)) if math.isfinite(scores[i])]
    if not ok:
        raise TuningError("every candidate failed", [
            {"theta": cands[i].as_dict(), "error": diags[i]} for i in range(len(cands))
        ])
    best = min(ok, key=lambda i: (scores[i],) + cands[i].key())
    table = [(c.lam, c.alpha, c.gamma, s) for c, s in zip(cands, scores)]
    failed = [{"theta": cands[i].as_dict(), "error": diags[i]} for i in range(len(cands)) if diags[i]]
    return TuneResult(cands[best], scores[best], table, failed)


def write_scores(path, table):
    rows = [[fmt(lm), fmt(a), "" if g is None else fmt(g), fmt(s)] for lm, a, g, s in table]
    write_csv(path, ["lambda", "alpha", "gamma", "score"], list(zip(*rows)) if rows else [[]] * 4)
