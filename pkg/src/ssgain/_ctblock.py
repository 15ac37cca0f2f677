"""Hot loops for CT step-input Gram assembly and representer evaluation.

With a step input the output representer at tau is a signed sum of cumulative
kernel integrals, phi_tau = sum_p w_p * int_0^{sbar_p(tau)} k(., s) ds, where
w_p are the input jump weights. Inner products therefore reduce to sums of
``nu`` over pairs of clamped breakpoint offsets, and pointwise values to sums
of ``psi(t, 0, .)``. Both a numba kernel and a chunked numpy version exist;
``NUMBA_ENABLED`` picks one.
"""
import numpy as np

from . import _formulas as F
from ._accel import NUMBA_ENABLED, njit, prange

_nu = njit(F.nu_ct)
_nubar = njit(F.nubar_ct)
_psi = njit(F.psi_ct)


@njit(parallel=True)
def _block_nb(fam, la, lg, sb1, c1, sb2, c2, sym):
    n1, p1 = sb1.shape
    n2, p2 = sb2.shape
    out = np.zeros((n1, n2))
    for i in prange(n1):
        j0 = i if sym else 0
        for j in range(j0, n2):
            acc = 0.0
            for p in range(p1):
                x = sb1[i, p]
                if x == 0.0 or c1[p] == 0.0:
                    continue
                for q in range(p2):
                    y = sb2[j, q]
                    if y == 0.0 or c2[q] == 0.0:
                        continue
                    acc += c1[p] * c2[q] * _nu(fam, la, lg, x, y)
            out[i, j] = acc
    if sym:
        for i in range(n1):
            for j in range(i):
                out[i, j] = out[j, i]
    return out


def _block_np(fam, la, lg, sb1, c1, sb2, c2, sym, chunk=16):
    n1, n2 = sb1.shape[0], sb2.shape[0]
    out = np.zeros((n1, n2))
    y = sb2[None, :, None, :]
    for lo in range(0, n1, chunk):
        x = sb1[lo:lo + chunk, None, :, None]
        vals = F.nu_ct(fam, la, lg, x, y)
        out[lo:lo + chunk] = np.einsum("ijpq,p,q->ij", vals, c1, c2)
    if sym:
        out = np.triu(out) + np.triu(out, 1).T
    return out


@njit(parallel=True)
def _nubar_nb(fam, la, lg, sb, c):
    n, P = sb.shape
    out = np.zeros(n)
    for i in prange(n):
        acc = 0.0
        for p in range(P):
            if sb[i, p] != 0.0 and c[p] != 0.0:
                acc += c[p] * _nubar(fam, la, lg, sb[i, p])
        out[i] = acc
    return out


def _nubar_np(fam, la, lg, sb, c):
    return F.nubar_ct(fam, la, lg, sb) @ c


@njit(parallel=True)
def _repr_nb(fam, la, lg, t, sb, w, coef):
    nt = t.shape[0]
    n, P = sb.shape
    out = np.zeros(nt)
    for k in prange(nt):
        acc = 0.0
        for i in range(n):
            if coef[i] == 0.0:
                continue
            inner = 0.0
            for p in range(P):
                if sb[i, p] != 0.0 and w[p] != 0.0:
                    inner += w[p] * _psi(fam, la, lg, t[k], 0.0, sb[i, p])
            acc += coef[i] * inner
        out[k] = acc
    return out


def _repr_np(fam, la, lg, t, sb, w, coef, chunk=64):
    out = np.zeros(len(t))
    for lo in range(0, len(t), chunk):
        tt = t[lo:lo + chunk, None, None]
        vals = F.psi_ct(fam, la, lg, tt, 0.0, sb[None, :, :])
        out[lo:lo + chunk] = np.einsum("kip,p,i->k", vals, w, coef)
    return out


def ct_block(code, la, lg, sb1, c1, sb2, c2, sym=False, use_numba=None):
    """[sum_pq c1_p c2_q nu(sb1[i,p], sb2[j,q])]_{ij}."""
    use = NUMBA_ENABLED if use_numba is None else use_numba
    args = (int(code), float(la), float(lg),
            np.ascontiguousarray(sb1, dtype=float), np.ascontiguousarray(c1, dtype=float),
            np.ascontiguousarray(sb2, dtype=float), np.ascontiguousarray(c2, dtype=float))
    return _block_nb(*args, bool(sym)) if use else _block_np(*args, bool(sym))


def ct_nubar_col(code, la, lg, sb, c, use_numba=None):
    """[sum_p c_p nu_bar(sb[i,p])]_i."""
    use = NUMBA_ENABLED if use_numba is None else use_numba
    args = (int(code), float(la), float(lg),
            np.ascontiguousarray(sb, dtype=float), np.ascontiguousarray(c, dtype=float))
    return _nubar_nb(*args) if use else _nubar_np(*args)


def ct_representers(code, la, lg, t, sb, w, coef, use_numba=None):
    """sum_i coef_i * phi_{tau_i}(t) for every t."""
    use = NUMBA_ENABLED if use_numba is None else use_numba
    args = (int(code), float(la), float(lg),
            np.ascontiguousarray(t, dtype=float), np.ascontiguousarray(sb, dtype=float),
            np.ascontiguousarray(w, dtype=float), np.ascontiguousarray(coef, dtype=float))
    return _repr_nb(*args) if use else _repr_np(*args)
