"""Representers and the Gram system (Phi, A, a0).

Index 0 is the steady-state gain representer phi_0; index k >= 1 is the
output representer phi_{u, tau_k} of the k-th measurement instant. Phi is the
matrix of their RKHS inner products, ``A = Phi[1:, :]`` and ``a0 = Phi[:, 0]``.
"""
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import kernels as K
from ._ctblock import ct_block, ct_nubar_col, ct_representers
from .errors import ArgumentError, UnsupportedInputError
from .kernels import Domain, KernelParams
from .oracle import CustomKernel, oracle_nu, oracle_nu_bar, oracle_phi0_ct, oracle_phi0_dt
from .oracle import oracle_phi0_norm_sq_ct, oracle_phi0_norm_sq_dt, oracle_psi
from .signals import DtInput, StepSignal, fmt, index_set, sbar_matrix, toeplitz


@dataclass(frozen=True, eq=False)
class GramSystem:
    phi: np.ndarray
    kernel: object
    input: object
    sample_times: np.ndarray
    indices: np.ndarray

    def __post_init__(self):
        for name in ("phi", "sample_times", "indices"):
            arr = np.array(getattr(self, name), copy=True)
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
        n = len(self.sample_times)
        if self.phi.shape != (n + 1, n + 1):
            raise ArgumentError(f"Phi must be {(n + 1, n + 1)}, got {self.phi.shape}")

    @property
    def domain(self):
        return self.kernel.domain

    @property
    def n(self):
        return len(self.sample_times)

    @property
    def A(self):
        return self.phi[1:, :]

    @property
    def a0(self):
        return self.phi[:, 0]

    def restrict(self, positions):
        """Gram system of the representer subset ``positions`` (0-based, into 1..n)."""
        pos = index_set(positions, self.n)
        sel = np.concatenate([[0], pos + 1])
        return GramSystem(self.phi[np.ix_(sel, sel)], self.kernel, self.input,
                          self.sample_times[pos], self.indices[pos])

    def zero_representers(self, rtol=1e-14):
        """Positions (1-based in Phi) of representers with ||phi_i|| = 0."""
        d = np.diag(self.phi)
        scale = max(float(np.max(np.abs(d))), 1e-300)
        return np.flatnonzero(d[1:] <= rtol * scale) + 1

    def dump_csv(self, path):
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w", encoding="utf-8") as fh:
            for row in self.phi:
                fh.write(",".join(fmt(v) for v in row) + "\n")


# -- representers -----------------------------------------------------------
def phi0_values(kernel, t):
    if isinstance(kernel, CustomKernel):
        f = oracle_phi0_dt if kernel.domain is Domain.DT else oracle_phi0_ct
        return np.array([f(kernel, float(v)) for v in np.atleast_1d(t)])
    return np.atleast_1d(np.asarray(K.phi0_eval(kernel, t), dtype=float))


def phi0_norm(kernel):
    if isinstance(kernel, CustomKernel):
        f = oracle_phi0_norm_sq_dt if kernel.domain is Domain.DT else oracle_phi0_norm_sq_ct
        return f(kernel)
    return K.phi0_norm_sq(kernel)


def _kmat(kernel, s, t):
    s = np.asarray(s, dtype=float)
    t = np.asarray(t, dtype=float)
    if isinstance(kernel, CustomKernel):
        return np.asarray(kernel.func(s[:, None], t[None, :]), dtype=float)
    return K.kernel_matrix(kernel, s, t)


def _check_input(kernel, inp):
    if kernel.domain is Domain.CT and not isinstance(inp, StepSignal):
        raise UnsupportedInputError("CT representers need a StepSignal input")
    if kernel.domain is Domain.DT and not isinstance(inp, DtInput):
        raise UnsupportedInputError("DT representers need a DtInput")


def _u_at(inp, idx):
    u = inp.samples
    idx = np.asarray(idx)
    ok = (idx >= 0) & (idx < len(u))
    return np.where(ok, u[np.clip(idx, 0, max(len(u) - 1, 0))], 0.0)


def representer_eval(kernel, inp, tau, t):
    """phi_{u,tau}(t): the representer of the output sample at ``tau``.

    DT: sum_{s=0}^{tau} k(t, s) u_{tau-s}.
    CT: sum_i xi_{i+1} psi(t, sbar_{i+1}(tau), sbar_i(tau)).
    """
    _check_input(kernel, inp)
    t = np.atleast_1d(np.asarray(t, dtype=float))
    if kernel.domain is Domain.DT:
        tau = int(tau)
        if tau < 0:
            return np.zeros_like(t)
        s = np.arange(tau + 1)
        return _kmat(kernel, t, s) @ _u_at(inp, tau - s)
    sb = sbar_matrix(inp, [tau])[0]
    out = np.zeros_like(t)
    for i, xi in enumerate(inp.levels):
        lo, hi = sb[i + 1], sb[i]
        assert lo <= hi, "breakpoints must be increasing"
        if hi == lo or xi == 0.0:
            continue
        if isinstance(kernel, CustomKernel):
            vals = np.array([oracle_psi(kernel, float(v), lo, hi) for v in t])
        else:
            vals = np.asarray(K.psi(kernel, t, lo, hi))
        out += xi * vals
    return out


def representers_combo(kernel, inp, taus, coef, t):
    """sum_k coef_k * phi_{u,tau_k}(t), vectorized over ``t``."""
    _check_input(kernel, inp)
    t = np.atleast_1d(np.asarray(t, dtype=float))
    coef = np.asarray(coef, dtype=float)
    taus = np.asarray(taus, dtype=float)
    if len(taus) == 0:
        return np.zeros_like(t)
    if kernel.domain is Domain.DT:
        H = int(taus.max()) + 1
        # g(t) = k(t, 0..H-1) @ (T_u^T c_full), c_full scattered at the tau positions
        c_full = np.zeros(H)
        np.add.at(c_full, taus.astype(int), coef)
        weights = toeplitz(inp, H).T @ c_full
        return _kmat(kernel, t, np.arange(H)) @ weights
    if isinstance(kernel, CustomKernel):
        return sum(c * representer_eval(kernel, inp, tau, t) for c, tau in zip(coef, taus))
    sb = sbar_matrix(inp, taus)
    return ct_representers(kernel.code, kernel.log_alpha, kernel.log_gamma, t, sb,
                           inp.jump_weights, coef)


# -- Gram assembly ------------------------------------------------------------
def _dt_blocks(kernel, inp, taus1, taus2):
    """(<phi_0, phi_tau1>, <phi_tau1, phi_tau2>) for integer instants."""
    taus1 = np.asarray(taus1, dtype=int)
    taus2 = np.asarray(taus2, dtype=int)
    H = int(max(taus1.max(initial=0), taus2.max(initial=0))) + 1
    T = toeplitz(inp, H)
    grid = np.arange(H)
    Km = _kmat(kernel, grid, grid)
    TK = T @ Km
    cross = TK[taus1] @ T[taus2].T
    col = T[taus1] @ phi0_values(kernel, grid)
    return col, cross


def _assemble(norm, col, inner):
    n = len(col)
    phi = np.empty((n + 1, n + 1))
    phi[0, 0] = norm
    phi[1:, 0] = col
    phi[0, 1:] = col
    phi[1:, 1:] = inner
    return phi


def build_gram_dt(kernel, inp, n_d=None, index_set_=None, sample_times=None):
    """Gram system for a DT input at rest.

    With the default sample times 0..n_d-1 this is the Toeplitz form
    Phi = [[|phi0|^2, phi^T T_u^T], [T_u phi, T_u K T_u^T]]. Arbitrary
    non-negative integer ``sample_times`` are handled by the same products over
    the horizon max(t)+1 followed by row/column selection.
    """
    if kernel.domain is not Domain.DT:
        raise ArgumentError("build_gram_dt requires a DT kernel")
    _check_input(kernel, inp)
    if sample_times is None:
        if n_d is None:
            raise ArgumentError("give n_d or sample_times")
        sample_times = np.arange(n_d)
    st = np.asarray(sample_times, dtype=float)
    if np.any(st != np.round(st)) or np.any(st < 0):
        raise ArgumentError("DT sample times must be non-negative integers")
    col, inner = _dt_blocks(kernel, inp, st, st)
    inner = 0.5 * (inner + inner.T)
    gram = GramSystem(_assemble(phi0_norm(kernel), col, inner), kernel, inp, st, np.arange(len(st)))
    return gram if index_set_ is None else gram.restrict(index_set_)


def _ct_inner(kernel, inp, taus1, taus2, sym):
    if isinstance(kernel, CustomKernel):
        return _ct_inner_custom(kernel, inp, taus1, taus2)
    w = inp.jump_weights
    sb1 = sbar_matrix(inp, taus1)
    sb2 = sb1 if sym else sbar_matrix(inp, taus2)
    args = (kernel.code, kernel.log_alpha, kernel.log_gamma)
    col = ct_nubar_col(*args, sb1, w)
    inner = ct_block(*args, sb1, w, sb2, w, sym=sym)
    return col, inner


def _ct_inner_custom(kernel, inp, taus1, taus2):
    w = inp.jump_weights
    sb1, sb2 = sbar_matrix(inp, taus1), sbar_matrix(inp, taus2)
    col = np.array([sum(w[p] * oracle_nu_bar(kernel, x) for p, x in enumerate(r) if x > 0 and w[p])
                    for r in sb1])
    inner = np.zeros((len(taus1), len(taus2)))
    for i, r1 in enumerate(sb1):
        for j, r2 in enumerate(sb2):
            inner[i, j] = sum(
                w[p] * w[q] * oracle_nu(kernel, x, y)
                for p, x in enumerate(r1) if x > 0 and w[p]
                for q, y in enumerate(r2) if y > 0 and w[q]
            )
    return col, inner


def build_gram_ct(kernel, inp, sample_times, index_set_=None):
    """Gram system for a CT step input.

    [Phi]_00 = |phi0|^2, first column from nu_bar (kappa-bar sums), interior from
    nu (kappa sums); assembled on the upper triangle and mirrored.
    """
    if kernel.domain is not Domain.CT:
        raise ArgumentError("build_gram_ct requires a CT kernel")
    _check_input(kernel, inp)
    st = np.asarray(sample_times, dtype=float)
    if np.any(st < 0):
        raise ArgumentError("sample times must be non-negative")
    col, inner = _ct_inner(kernel, inp, st, st, sym=True)
    gram = GramSystem(_assemble(phi0_norm(kernel), col, inner), kernel, inp, st, np.arange(len(st)))
    return gram if index_set_ is None else gram.restrict(index_set_)


def build_gram(kernel, dataset, positions=None):
    """Gram system for every (or the selected) measurement instant of ``dataset``."""
    if kernel.domain is not dataset.domain:
        raise ArgumentError("kernel and dataset time domains differ")
    if kernel.domain is Domain.DT:
        gram = build_gram_dt(kernel, dataset.input, sample_times=dataset.sample_times)
    else:
        gram = build_gram_ct(kernel, dataset.input, dataset.sample_times)
    return gram if positions is None else gram.restrict(positions)


def cross_gram(gram, times):
    """Rows [<phi_{u,t}, phi_j>]_{j=0..n} for new measurement instants ``t``."""
    times = np.atleast_1d(np.asarray(times, dtype=float))
    kernel, inp = gram.kernel, gram.input
    if kernel.domain is Domain.DT:
        col, inner = _dt_blocks(kernel, inp, times, gram.sample_times)
    else:
        col, inner = _ct_inner(kernel, inp, times, gram.sample_times, sym=False)
    return np.column_stack([col, inner])


def gain_functional(gram, x):
    """a0^T x: the steady-state gain of sum_i x_i phi_i."""
    x = np.asarray(x, dtype=float)
    if x.shape != (gram.n + 1,):
        raise ArgumentError(f"x must have length {gram.n + 1}")
    return float(gram.a0 @ x)


# -- literal kappa forms (used as a cross-check of the jump-weight assembly) ---
def kappa(kernel, step, i, j, tau1, tau2):
    s1 = [float(np.maximum(tau1 - b, 0.0)) for b in step.breakpoints]
    s2 = [float(np.maximum(tau2 - b, 0.0)) for b in step.breakpoints]
    nu = lambda x, y: K.nu(kernel, x, y)
    return nu(s1[i], s2[j]) - nu(s1[i + 1], s2[j]) - nu(s1[i], s2[j + 1]) + nu(s1[i + 1], s2[j + 1])


def kappa_bar(kernel, step, i, tau):
    s = [float(np.maximum(tau - b, 0.0)) for b in step.breakpoints]
    return K.nu_bar(kernel, s[i]) - K.nu_bar(kernel, s[i + 1])


def ct_inner_products_literal(kernel, step, tau1, tau2):
    """(<phi_0, phi_tau1>, <phi_tau1, phi_tau2>) summed term by term over kappa."""
    xi = step.levels
    ns = step.n_steps
    first = sum(xi[i] * kappa_bar(kernel, step, i, tau1) for i in range(ns))
    second = sum(xi[i] * xi[j] * kappa(kernel, step, i, j, tau1, tau2)
                 for i in range(ns) for j in range(ns))
    return first, second
