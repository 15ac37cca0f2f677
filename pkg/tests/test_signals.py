import numpy as np
import pytest
import scipy.integrate as si

from ssgain.errors import ArgumentError, InputFormatError
from ssgain.kernels import Domain
from ssgain.signals import (Dataset, DtInput, StepSignal, eval_input, index_set, load_ct_csv,
                            load_dt_csv, save_ct_csv, save_dt_csv, sbar, toeplitz)


def test_eval_step_input():
    u = StepSignal([0, 1, 2], [1, -1])
    assert eval_input(u, 0.5) == 1
    assert eval_input(u, 1.5) == -1
    assert eval_input(u, -3) == 0
    assert eval_input(u, 2.0) == 0


def test_eval_dt_input():
    u = DtInput([2.0, -1.0])
    assert list(eval_input(u, np.array([-1, 0, 1, 2]))) == [0, 2, -1, 0]


@pytest.mark.parametrize("u,n,expected", [
    ([1, 0, 0], 3, np.eye(3)),
    ([1, 1, 1], 3, np.tril(np.ones((3, 3)))),
    ([2, -1], 2, [[2, 0], [-1, 2]]),
])
def test_toeplitz(u, n, expected):
    assert np.array_equal(toeplitz(DtInput(u), n), np.asarray(expected, dtype=float))


def test_toeplitz_impulse_column(rng):
    u = rng.normal(size=6)
    e0 = np.zeros(6)
    e0[0] = 1
    assert np.array_equal(toeplitz(DtInput(u), 6) @ e0, u)


def test_sbar():
    step = StepSignal([1.0, 5.0, 6.0], [1.0, 2.0])
    assert sbar(step, 0, 3.0) == 2.0
    assert sbar(step, 1, 3.0) == 0.0
    for tau in np.linspace(0, 8, 17):
        assert all(sbar(step, i + 1, tau) <= sbar(step, i, tau) for i in range(2))


def test_step_integral():
    step = StepSignal([0.5, 1.2, 3.0, 3.7], [1.0, -2.0, 0.5])
    total = sum(si.quad(lambda t: eval_input(step, t), a, b)[0]
                for a, b in zip(step.breakpoints[:-1], step.breakpoints[1:]))
    assert total == pytest.approx(float(np.sum(step.levels * np.diff(step.breakpoints))), abs=1e-12)


def test_jump_weights_sum_to_zero():
    step = StepSignal([0, 1, 2, 4], [1.0, 3.0, -2.0])
    assert np.allclose(step.jump_weights, [1, 2, -5, 2])
    assert step.jump_weights.sum() == 0


@pytest.mark.parametrize("bp,lv", [([0, 1], [1, 2]), ([1, 0], [1]), ([-1, 1], [1]), ([0, 1], [])])
def test_bad_step_signal(bp, lv):
    with pytest.raises(ArgumentError):
        StepSignal(bp, lv)


def test_index_set():
    assert list(index_set([0, 2], 3)) == [0, 2]
    for bad in ([], [2, 1], [0, 3], [1, 1]):
        with pytest.raises(ArgumentError):
            index_set(bad, 3)


def test_dataset_validation():
    with pytest.raises(ArgumentError):
        Dataset(Domain.DT, DtInput([1.0]), [0.5], [1.0])
    with pytest.raises(ArgumentError):
        Dataset(Domain.CT, DtInput([1.0]), [0.5], [1.0])
    with pytest.raises(ArgumentError):
        Dataset(Domain.DT, DtInput([1.0]), [0, 0], [1.0, 2.0])


def test_dt_csv_roundtrip(tmp_path, rng):
    u = rng.normal(size=5)
    d = Dataset(Domain.DT, DtInput(u), [0, 1, 3], rng.normal(size=3))
    save_dt_csv(tmp_path / "d.csv", d)
    back = load_dt_csv(tmp_path / "d.csv")
    assert np.array_equal(back.input.samples, u)
    assert np.array_equal(back.sample_times, [0, 1, 3])
    assert np.array_equal(back.outputs, d.outputs)


def test_ct_csv_roundtrip(tmp_path):
    d = Dataset(Domain.CT, StepSignal([0, 0.1, 2.5], [1 / 3, -2.0]), [1.0 / 7, 0.2], [1.0, 2.0])
    save_ct_csv(tmp_path / "s.csv", tmp_path / "y.csv", d)
    back = load_ct_csv(tmp_path / "s.csv", tmp_path / "y.csv")
    assert np.array_equal(back.input.breakpoints, d.input.breakpoints)
    assert np.array_equal(back.input.levels, d.input.levels)
    assert np.array_equal(back.sample_times, d.sample_times)


def test_csv_diagnostics(tmp_path):
    p = tmp_path / "bad.csv"
    p.write_text("t,u,y\n0,1,2\n1,abc,3\n")
    with pytest.raises(InputFormatError) as exc:
        load_dt_csv(p)
    assert exc.value.row == 3 and exc.value.column == "u"
    p.write_text("t,y\n0,1\n")
    with pytest.raises(InputFormatError) as exc:
        load_dt_csv(p)
    assert exc.value.column == "u"
    p.write_text("t,u,y\n0,1\n")
    with pytest.raises(InputFormatError) as exc:
        load_dt_csv(p)
    assert exc.value.row == 2
    s = tmp_path / "s.csv"
    s.write_text("s,xi\n0,1\n2,5\n")
    y = tmp_path / "y.csv"
    y.write_text("t,y\n1,0\n")
    with pytest.raises(InputFormatError):
        load_ct_csv(s, y)
