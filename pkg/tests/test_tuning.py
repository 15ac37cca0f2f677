import math

import numpy as np
import pytest

from ssgain.errors import ArgumentError, TuningError
from ssgain.gram import build_gram
from ssgain.kernels import Domain, KernelParams
from ssgain.model import fit, predict
from ssgain.signals import Dataset, DtInput
from ssgain.solver import GainConstraint, Loss
from ssgain.tuning import SearchSpace, Theta, split, tune, validation_score, write_scores


def _data(rng, n=50, noise=0.05):
    u = rng.normal(size=n)
    g = 0.7 ** np.arange(n)
    y = np.convolve(u, g)[:n] + noise * rng.normal(size=n)
    return Dataset(Domain.DT, DtInput(u), np.arange(n), y)


def test_split():
    d = Dataset(Domain.DT, DtInput(np.ones(10)), np.arange(10), np.zeros(10))
    tr, va = split(d, 0.8)
    assert list(tr) == list(range(8)) and list(va) == [8, 9]
    assert set(tr) | set(va) == set(range(10)) and not set(tr) & set(va)
    with pytest.raises(ArgumentError):
        split(d, 0.95)
    with pytest.raises(ArgumentError):
        split(d, 1.0)


def test_score_is_recomputable(rng):
    d = _data(rng)
    parts = split(d, 0.8)
    th = Theta(0.1, 0.7)
    score = validation_score(th, d, parts, "TC")
    train = Dataset(d.domain, d.input, d.sample_times[parts[0]], d.outputs[parts[0]])
    m, _ = fit(train, th.kernel("TC", Domain.DT), th.lam)
    resid = d.outputs[parts[1]] - predict(m, d.sample_times[parts[1]])
    assert score >= 0
    assert abs(score - np.mean(resid**2)) <= 1e-12


def test_self_consistent_data_scores_zero(rng):
    d = _data(rng, noise=0.0)
    kp = KernelParams("TC", 0.7)
    m, _ = fit(d, kp, 0.1)
    clean = Dataset(d.domain, d.input, d.sample_times, predict(m, d.sample_times))
    th = Theta(1e-9, 0.7)
    assert validation_score(th, clean, split(clean, 0.8), "TC") <= 1e-10


def test_singleton_space(rng):
    d = _data(rng)
    res = tune(d, SearchSpace.singleton("DC", 0.3, 0.8, 0.9))
    assert res.best == Theta(0.3, 0.8, 0.9)
    assert len(res.table) == 1


def test_best_score_matches_independent_recompute(rng):
    d = _data(rng)
    cons = GainConstraint.exact(1 / 0.3)
    res = tune(d, SearchSpace("DC", lam=(1e-3, 1e1, 4), alpha=(0.5, 0.9, 3), gamma=(0.8, 1.0, 2)), constraint=cons)
    assert res.best_score == validation_score(res.best, d, split(d, 0.8), "DC", constraint=cons)
    assert res.best_score == min(s for *_, s in res.table)


def test_worse_candidate_does_not_change_argmin(rng):
    d = _data(rng)
    base = tune(d, SearchSpace("TC", lam=(1e-2, 1.0, 3), alpha=(0.6, 0.8, 3)))
    big = tune(d, SearchSpace("TC", lam=(1e-2, 1e4, 4), alpha=(0.6, 0.8, 3)))
    # lambda = 1e4 over-regularizes and can only add worse candidates
    assert big.best == base.best


def test_random_search_reproducible(rng):
    d = _data(rng)
    sp = SearchSpace("DC", kind="random", n_random=12, seed=5)
    a, b = tune(d, sp), tune(d, sp)
    assert a.best == b.best and a.table == b.table
    c = tune(d, SearchSpace("DC", kind="random", n_random=12, seed=6))
    assert c.table != a.table


def test_grid_permutation_invariant(rng):
    d = _data(rng)
    sp = SearchSpace("TC", lam=(1e-2, 1.0, 3), alpha=(0.6, 0.8, 3))
    res = tune(d, sp, workers=1)
    perm = rng.permutation(len(res.table))
    rows = [res.table[i] for i in perm]
    best = min(rows, key=lambda r: (r[3], r[0], r[1], -math.inf if r[2] is None else r[2]))
    assert (best[0], best[1]) == (res.best.lam, res.best.alpha)


def test_tie_break_prefers_small_parameters():
    d = Dataset(Domain.DT, DtInput(np.zeros(10)), np.arange(10), np.zeros(10))
    res = tune(d, SearchSpace("TC", lam=(1e-2, 1.0, 3), alpha=(0.6, 0.8, 3)))
    assert res.best == Theta(1e-2, 0.6)


def test_dc_space_respects_domain():
    cands = SearchSpace("DC", alpha=(0.5, 0.98, 4), gamma=(0.8, 1.4, 4)).candidates(Domain.CT)
    assert all(c.gamma < c.alpha ** -0.5 for c in cands)


def test_all_candidates_fail(rng):
    d = _data(rng)
    with pytest.raises(TuningError) as exc:
        _fail(d)
    assert exc.value.diagnostics


def _fail(d):
    import ssgain.tuning as T

    def boom(*a, **k):
        raise T.SsgainError("forced")

    with pytest.MonkeyPatch.context() as mp:
        mp.setattr(T, "solve_general", boom)
        return tune(d, SearchSpace.singleton("TC", 0.1, 0.7))


def test_space_validation():
    with pytest.raises(ArgumentError):
        SearchSpace("TC", lam=(1.0, 0.1, 3))
    with pytest.raises(Exception):
        SearchSpace("TC", alpha=(0.5, 1.2, 3))


def test_write_scores(tmp_path):
    write_scores(tmp_path / "s.csv", [(0.1, 0.5, None, 1.5), (0.2, 0.6, 0.9, float("nan"))])
    lines = (tmp_path / "s.csv").read_text().splitlines()
    assert lines[0] == "lambda,alpha,gamma,score"
    assert lines[1] == "0.10000000000000001,0.5,,1.5"
    assert lines[2].endswith(",nan")
