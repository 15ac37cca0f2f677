import json

import numpy as np
import pytest
import scipy.integrate as si

from ssgain.errors import ArgumentError, MetricError
from ssgain.gram import build_gram_ct, build_gram_dt, phi0_values
from ssgain.kernels import Domain, KernelParams
from ssgain.model import (IdentifiedModel, dumps, fit, fit_metric, impulse_response, load_model,
                          numeric_gain, predict, save_model, step_response)
from ssgain.signals import Dataset, DtInput, StepSignal, eval_input
from ssgain.solver import GainConstraint, Loss, solve_closed_form


def _dt_model(rng, fam="DC", n=25, delta=1.5):
    kp = KernelParams(fam, 0.75, 0.9 if fam == "DC" else None)
    g = build_gram_dt(kp, DtInput(rng.normal(size=n)), n_d=n)
    sol = solve_closed_form(g, rng.normal(size=n), 0.3, delta)
    return IdentifiedModel.from_solution(g, sol)


STEP = StepSignal([0.0, 1.3, 2.2, 4.0, 5.5], [1.0, -0.8, 1.5, 0.4])
TAUS = np.array([0.6, 1.4, 2.9, 4.1, 6.0])


def _ct_model(rng, fam="SS", delta=0.8):
    kp = KernelParams(fam, 0.55, 1.1 if fam == "DC" else None, "CT")
    g = build_gram_ct(kp, STEP, TAUS)
    sol = solve_closed_form(g, rng.normal(size=len(TAUS)), 0.05, delta)
    return IdentifiedModel.from_solution(g, sol)


def test_zero_and_unit_coefficients(rng):
    m = _dt_model(rng)
    t = np.arange(20)
    z = IdentifiedModel(m.kernel, m.input, m.sample_times, np.zeros_like(m.x))
    assert np.all(impulse_response(z, t) == 0)
    assert np.all(step_response(z, t) == 0)
    e0 = IdentifiedModel(m.kernel, m.input, m.sample_times, np.eye(len(m.x))[0])
    assert np.allclose(impulse_response(e0, t), phi0_values(m.kernel, t), rtol=0, atol=1e-15)


@pytest.mark.parametrize("fam", ["TC", "DC", "SS"])
def test_dt_gain_consistency(fam, rng):
    m = _dt_model(rng, fam)
    assert abs(m.achieved_gain - numeric_gain(m)) <= 1e-6 * max(1.0, abs(m.achieved_gain))
    assert abs(m.achieved_gain - 1.5) <= 1e-8


@pytest.mark.parametrize("fam", ["TC", "DC", "SS"])
def test_ct_gain_consistency(fam, rng):
    m = _ct_model(rng, fam)
    assert abs(m.achieved_gain - numeric_gain(m)) <= 1e-6 * max(1.0, abs(m.achieved_gain))
    assert abs(m.achieved_gain - 0.8) <= 1e-8


def test_dt_step_is_running_sum(rng):
    m = _dt_model(rng)
    t = np.arange(40)
    assert np.allclose(step_response(m, t), np.cumsum(impulse_response(m, t)), rtol=0, atol=1e-12)
    T = m.horizon(1e-13)
    assert abs(step_response(m, [T])[0] - m.achieved_gain) <= 1e-6


@pytest.mark.parametrize("fam", ["TC", "DC", "SS"])
def test_ct_step_matches_quadrature(fam, rng):
    m = _ct_model(rng, fam)
    kinks = sorted({float(t - b) for t in TAUS for b in STEP.breakpoints if t > b})
    for T in (0.0, 0.9, 3.3, 7.5):
        pts = [k for k in kinks if 0 < k < T]
        ref = si.quad(lambda s: impulse_response(m, s)[0], 0.0, T, points=pts or None, limit=200,
                      epsabs=1e-12, epsrel=1e-12)[0] if T > 0 else 0.0
        assert abs(step_response(m, [T])[0] - ref) <= 1e-8
    T = m.horizon(1e-13)
    assert abs(step_response(m, [T])[0] - m.achieved_gain) <= 1e-6


def test_ct_step_grid_refinement(rng):
    m = _ct_model(rng, "TC")
    coarse = np.linspace(0, 8, 9)
    fine = np.linspace(0, 8, 81)
    assert np.allclose(step_response(m, fine)[::10], step_response(m, coarse), rtol=0, atol=1e-12)


def test_step_grid_validation(rng):
    m = _dt_model(rng)
    with pytest.raises(ArgumentError):
        step_response(m, [3, 1])


def test_predict_training_bit_exact(rng):
    m = _ct_model(rng)
    assert np.array_equal(predict(m, TAUS), m.gram.A @ m.x)
    assert np.array_equal(predict(m, TAUS[[3]]), m.gram.A[[3]] @ m.x)


@pytest.mark.parametrize("fam", ["TC", "DC", "SS"])
def test_predict_new_time_is_convolution(fam, rng):
    m = _ct_model(rng, fam)
    for tn in (1.0, 3.7, 8.0):
        kinks = [tn - b for b in STEP.breakpoints if 0 < tn - b < tn]
        ref = si.quad(lambda v: impulse_response(m, v)[0] * eval_input(STEP, tn - v), 0.0, tn,
                      points=kinks or None, limit=200, epsabs=1e-12, epsrel=1e-12)[0]
        assert abs(predict(m, [tn])[0] - ref) <= 1e-6


def test_predict_zero_input(rng):
    kp = KernelParams("TC", 0.6)
    g = build_gram_dt(kp, DtInput(np.zeros(6)), n_d=6)
    m = IdentifiedModel(kp, g.input, g.sample_times, rng.normal(size=7), _gram=g)
    assert np.all(predict(m, [0, 3, 9]) == 0)


def test_fit_metric():
    g = np.array([1.0, 0.5, -0.2])
    assert fit_metric(g, g) == 100.0
    assert fit_metric(np.zeros(3), g) == 0.0
    assert fit_metric(2 * g, g) == 0.0
    with pytest.raises(MetricError):
        fit_metric(g, np.zeros(3))


def test_json_roundtrip_bit_exact(tmp_path, rng):
    for m in (_dt_model(rng), _ct_model(rng, "DC")):
        m.lam, m.constraint = 0.3, GainConstraint(-np.inf, 2.0).as_dict()
        save_model(tmp_path / "m.json", m)
        back = load_model(tmp_path / "m.json")
        assert np.array_equal(back.x, m.x)
        assert np.array_equal(back.sample_times, m.sample_times)
        assert back.kernel == m.kernel
        assert back.achieved_gain == m.achieved_gain
        assert back.constraint["lower"] == "-inf"
        save_model(tmp_path / "m2.json", back)
        assert (tmp_path / "m.json").read_bytes() == (tmp_path / "m2.json").read_bytes()


def test_dumps_17_digits():
    text = dumps({"a": 0.1, "b": [1 / 3], "c": float("inf"), "d": None})
    assert "0.10000000000000001" in text and "0.33333333333333331" in text
    assert json.loads(text)["c"] == "inf"


def test_fit_helper(rng):
    kp = KernelParams("TC", 0.7)
    d = Dataset(Domain.DT, DtInput(rng.normal(size=30)), np.arange(30), rng.normal(size=30))
    m, sol = fit(d, kp, 0.2, Loss(), GainConstraint.exact(0.7))
    assert abs(m.achieved_gain - 0.7) <= 1e-8
    assert m.loss == {"kind": "squared", "sigma": None}
