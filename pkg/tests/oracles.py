"""Brute-force references shared by the unit and acceptance tests."""
import math

import numpy as np
import scipy.integrate as si

from ssgain import kernels as K
from ssgain.oracle import oracle_phi0_ct, oracle_phi0_norm_sq_ct, oracle_phi0_norm_sq_dt
from ssgain.signals import eval_input


def dt_horizon(kp, tol=1e-17):
    c, a = kp.envelope
    return int(math.ceil(2 * math.log(tol / c) / math.log(a))) + 1


def dt_gram_bruteforce(kp, u, taus):
    """Pairwise <phi_tau1, phi_tau2> = sum_s sum_r u_{tau1-s} u_{tau2-r} k(s, r), with phi_0 by summation."""
    u = np.asarray(u, dtype=float)
    uu = lambda i: u[i] if 0 <= i < len(u) else 0.0
    R = dt_horizon(kp)
    n = len(taus)
    phi = np.zeros((n + 1, n + 1))
    phi[0, 0] = oracle_phi0_norm_sq_dt(kp)
    for i, t1 in enumerate(taus):
        # <phi_0, phi_tau> = sum_s u_{tau-s} sum_r k(s, r)
        phi[0, i + 1] = phi[i + 1, 0] = sum(
            uu(t1 - s) * sum(K.kernel_eval(kp, s, r) for r in range(R)) for s in range(t1 + 1))
        for j, t2 in enumerate(taus):
            phi[i + 1, j + 1] = sum(uu(t1 - s) * uu(t2 - r) * K.kernel_eval(kp, s, r)
                                    for s in range(t1 + 1) for r in range(t2 + 1))
    return phi


def _kinks(step, tau):
    return sorted({float(tau - b) for b in step.breakpoints if 0 < tau - b < tau})


def ct_entry_quadrature(kp, step, tau1, tau2):
    """integral_0^tau1 integral_0^tau2 k(s, t) u(tau1 - s) u(tau2 - t) dt ds by nested adaptive quadrature."""
    if tau1 <= 0 or tau2 <= 0:
        return 0.0
    p2 = _kinks(step, tau2)

    def inner(s):
        us = eval_input(step, tau1 - s)
        if us == 0:
            return 0.0
        pts = sorted(set(p2 + ([s] if 0 < s < tau2 else [])))
        f = lambda t: K.kernel_eval(kp, s, t) * eval_input(step, tau2 - t)
        return us * si.quad(f, 0.0, tau2, points=pts or None, limit=200, epsabs=1e-12, epsrel=1e-12)[0]

    return si.quad(inner, 0.0, tau1, points=_kinks(step, tau1) or None, limit=200,
                   epsabs=1e-11, epsrel=1e-11)[0]


def ct_col_quadrature(kp, step, tau):
    if tau <= 0:
        return 0.0
    f = lambda s: eval_input(step, tau - s) * oracle_phi0_ct(kp, s)
    return si.quad(f, 0.0, tau, points=_kinks(step, tau) or None, limit=200, epsabs=1e-11, epsrel=1e-11)[0]


def ct_gram_quadrature(kp, step, taus):
    n = len(taus)
    phi = np.zeros((n + 1, n + 1))
    phi[0, 0] = oracle_phi0_norm_sq_ct(kp)
    for i, t1 in enumerate(taus):
        phi[0, i + 1] = phi[i + 1, 0] = ct_col_quadrature(kp, step, t1)
        for j in range(i, n):
            phi[i + 1, j + 1] = phi[j + 1, i + 1] = ct_entry_quadrature(kp, step, t1, taus[j])
    return phi


def ridge_predictions(gram, y, lam):
    """A x for the unconstrained problem via the eigenbasis of K = Phi[1:, 1:]: V w/(w+lam) V^T y."""
    w, V = np.linalg.eigh(gram.phi[1:, 1:])
    w = np.clip(w, 0.0, None)
    return V @ ((w / (w + lam)) * (V.T @ y))


def random_spd_gram(rng, n, cond):
    from ssgain.gram import GramSystem

    Q, _ = np.linalg.qr(rng.normal(size=(n + 1, n + 1)))
    w = np.geomspace(1.0, 1.0 / cond, n + 1) * rng.uniform(0.5, 5.0)
    P = (Q * w) @ Q.T
    return GramSystem(0.5 * (P + P.T), None, None, np.arange(n, dtype=float), np.arange(n))
