"""Numba vs pure-numpy timings for the CT Gram hot loops.

    python benchmarks/bench_gram.py [--sizes 50 100 200 400] [--repeat 3]

Both paths run in one process through the ``use_numba`` switch, so the
numba column is only available when numba is installed and SSGAIN_NUMBA is
not 0. Each row also reports the max abs difference between the two results.
"""
import argparse
import time

import numpy as np

from ssgain._accel import NUMBA_ENABLED
from ssgain._ctblock import ct_block, ct_nubar_col, ct_representers
from ssgain.gram import sbar_matrix
from ssgain.kernels import KernelParams
from ssgain.signals import StepSignal


def _best(fn, repeat):
    best = np.inf
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        best = min(best, time.perf_counter() - t0)
    return best, out


def case(kernel, n, n_steps, repeat, rng):
    bp = np.r_[0.0, np.cumsum(rng.uniform(0.5, 2.0, n_steps))]
    step = StepSignal(bp, rng.choice([-1.0, 1.0], n_steps))
    taus = np.linspace(0.1, bp[-1] + 5.0, n)
    sb, w = sbar_matrix(step, taus), step.jump_weights
    args = (kernel.code, kernel.log_alpha, kernel.log_gamma)
    grid = np.linspace(0.0, bp[-1] + 10.0, 4 * n)
    coef = rng.normal(size=n)
    jobs = {
        "inner": lambda use: ct_block(*args, sb, w, sb, w, sym=True, use_numba=use),
        "column": lambda use: ct_nubar_col(*args, sb, w, use_numba=use),
        "eval": lambda use: ct_representers(*args, grid, sb, w, coef, use_numba=use),
    }
    rows = []
    for name, job in jobs.items():
        t_np, r_np = _best(lambda: job(False), repeat)
        if NUMBA_ENABLED:
            job(True)  # compile outside the timed region
            t_nb, r_nb = _best(lambda: job(True), repeat)
            diff = float(np.max(np.abs(r_nb - r_np)))
        else:
            t_nb, diff = np.nan, np.nan
        rows.append((kernel.family.value, n, n_steps, name, t_np, t_nb, t_np / t_nb, diff))
    return rows


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--sizes", type=int, nargs="+", default=[50, 100, 200, 400])
    ap.add_argument("--steps", type=int, default=10)
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--seed", type=int, default=0)
    a = ap.parse_args(argv)
    rng = np.random.default_rng(a.seed)
    kernels = [KernelParams("TC", 0.6, domain="CT"), KernelParams("DC", 0.6, 1.1, "CT"),
               KernelParams("SS", 0.6, domain="CT")]
    print(f"numba enabled: {NUMBA_ENABLED}")
    print(f"{'kernel':6} {'n':>5} {'steps':>5} {'op':7} {'numpy s':>10} {'numba s':>10} {'speedup':>8} {'max diff':>9}")
    for kernel in kernels:
        for n in a.sizes:
            for row in case(kernel, n, a.steps, a.repeat, rng):
                print("{:6} {:5d} {:5d} {:7} {:10.4f} {:10.4f} {:8.1f} {:9.1e}".format(*row))


if __name__ == "__main__":
    main()
