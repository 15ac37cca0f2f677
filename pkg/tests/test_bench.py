import math

import numpy as np
import pytest
import scipy.integrate as si
import scipy.signal as ss

from ssgain.bench import (MonteCarloConfig, NoiseSpec, RandomSystemSpec, add_noise, example1_dataset,
                          example1_impulse, example1_step, example1_system, gen_system, mc_trial,
                          monte_carlo, simulate, summarize, switching_input, write_results)
from ssgain.tuning import SearchSpace


def test_scalar_system():
    s = gen_system(RandomSystemSpec(1, 0.5, seed=3))
    g = s.g[1:]
    assert np.allclose(np.abs(g[1:] / g[:-1]), 0.5)
    assert abs(np.sum(s.g**2) - 1) < 1e-6


@pytest.mark.parametrize("n,r", [(8, 0.8), (12, 0.9), (16, 0.95)])
def test_random_system_properties(n, r):
    s = gen_system(RandomSystemSpec(n, r, seed=n))
    assert np.max(np.abs(np.linalg.eigvals(s.A))) <= r + 1e-9
    assert abs(np.sum(s.g**2) - 1) < 1e-6
    assert s.gain == pytest.approx(np.sum(s.g), abs=1e-8)
    t = gen_system(RandomSystemSpec(n, r, seed=n))
    assert np.array_equal(s.A, t.A) and np.array_equal(s.g, t.g)


def test_impulse_response_matches_state_space():
    s = gen_system(RandomSystemSpec(5, 0.9, seed=1))
    _, (y,) = ss.dimpulse((s.A, s.B[:, None], s.C[None, :], [[0.0]], 1), n=30)
    assert np.allclose(y[:, 0], s.g[:30], atol=1e-12)


def test_simulate_impulse_and_zero():
    s = gen_system(RandomSystemSpec(6, 0.8, seed=2))
    u = np.zeros(50)
    u[0] = 1.0
    d = simulate(s, u, 50)
    assert np.allclose(d.outputs, s.g[:50], atol=1e-15)
    z = simulate(s, np.zeros(50), 50, NoiseSpec(std=0.3, seed=4))
    w = np.random.default_rng(4).standard_normal(50) * 0.3
    assert np.array_equal(z.outputs, w)


@pytest.mark.parametrize("snr", [5.0, 20.0])
def test_realized_snr(snr):
    s = gen_system(RandomSystemSpec(10, 0.9, seed=7))
    u = np.random.default_rng(0).standard_normal(200)
    d = simulate(s, u, 200, NoiseSpec(snr, seed=1))
    clean = simulate(s, u, 200).outputs
    w = d.outputs - clean
    assert abs(10 * math.log10(np.mean(clean**2) / np.mean(w**2)) - snr) <= 0.1
    assert abs(d.meta["realized_snr_db"] - snr) <= 0.1


def test_example1_truth():
    assert example1_impulse(0.0) == pytest.approx(1.0, abs=1e-15)
    assert example1_step(60.0) == pytest.approx(1.0, abs=1e-12)
    assert abs(example1_step(30.0) - 1.0) <= 1e-3
    gain = si.quad(lambda t: float(example1_impulse(t)), 0, np.inf, limit=400)[0]
    assert gain == pytest.approx(1.0, abs=1e-8)
    # fine-step state-space integration of G(s) = (s + 2)/(s^2 + s + 2)
    sys = ss.lti([1.0, 2.0], [1.0, 1.0, 2.0])
    t = np.linspace(0, 20, 2001)
    _, h = ss.impulse(sys, T=t)
    imp, stp = example1_system(t)
    assert np.allclose(h, imp, atol=1e-8)
    assert np.allclose(np.r_[0, np.cumsum(0.5 * (imp[1:] + imp[:-1]) * np.diff(t))], stp, atol=1e-4)


def test_switching_input():
    u = switching_input(3)
    assert u.breakpoints[0] == 0.0 and u.breakpoints[-1] == 100.0
    assert set(np.abs(u.levels)) == {1.0}
    assert np.all(u.levels[1:] == -u.levels[:-1])


def test_example1_dataset():
    d = example1_dataset(11)
    assert d.n == 201 and d.sample_times[-1] == 100.0
    assert abs(d.meta["realized_snr_db"] - 20.0) <= 0.1
    e = example1_dataset(11)
    assert np.array_equal(d.outputs, e.outputs)


SMALL = SearchSpace("DC", lam=(1e-6, 1e-2, 3), alpha=(0.7, 0.95, 3), gamma=(0.9, 1.0, 2))


def test_noiseless_sanity():
    cfg = MonteCarloConfig(trials=1, n_range=(3, 3), radii=(0.8,), snr_db=(math.inf,), space=SMALL)
    rows = mc_trial(cfg, 0, 1234)
    assert all(r["fit_pct"] > 99 for r in rows)
    assert abs(rows[0]["gain_err"]) <= 1e-8


def test_monte_carlo_deterministic(tmp_path):
    cfg = MonteCarloConfig(trials=2, snr_db=(10.0,), space=SMALL, seed=9)
    a, b = monte_carlo(cfg), monte_carlo(cfg)
    write_results(tmp_path / "a.csv", a)
    write_results(tmp_path / "b.csv", b)
    assert (tmp_path / "a.csv").read_bytes() == (tmp_path / "b.csv").read_bytes()
    assert all(abs(r["gain_err"]) <= 1e-8 for r in a if r["method"] == "constrained")
    s = summarize(a)
    fits = sorted(r["fit_pct"] for r in a if r["method"] == "ridge")
    assert s["ridge@10dB"]["fit_median"] == pytest.approx(np.median(fits))
    assert (tmp_path / "a.csv").read_text().splitlines()[0] == "trial,method,snr_db,n,r,fit_pct,gain_err,seconds"


def test_add_noise_none():
    y = np.arange(4.0)
    z, snr = add_noise(y, None)
    assert np.array_equal(z, y) and snr == math.inf
