"""Numerical oracles for kernel integrals and sums.

These are independent of the closed forms in :mod:`ssgain.kernels`: CT
quantities use adaptive Gauss-Kronrod quadrature (QUADPACK via scipy) on the
raw kernel, DT quantities use brute-force summation. Improper ranges are cut
at a horizon X chosen from the decay envelope |k(s, t)| <= C a**((s+t)/2), so
the neglected tail is bounded analytically by ``tail_cutoff_tol``.

Custom kernels enter only through this path (:class:`CustomKernel`).
"""
from dataclasses import dataclass
import math
from typing import Callable
import warnings

import numpy as np
from scipy import integrate

from .errors import ArgumentError, ConvergenceError
from .kernels import Domain, Family, KernelParams, QuadratureConfig

DEFAULT_CONFIG = QuadratureConfig()


@dataclass(frozen=True)
class CustomKernel:
    """User-supplied kernel with a declared decay envelope.

    ``func(s, t)`` must accept numpy arrays (broadcasting) as well as floats.
    The envelope promises |func(s, t)| <= envelope_c * envelope_alpha**((s+t)/2).
    """

    func: Callable
    envelope_c: float
    envelope_alpha: float
    domain: Domain = Domain.CT

    def __post_init__(self):
        object.__setattr__(self, "domain", Domain(str(self.domain).upper().split(".")[-1]))

    @property
    def envelope(self):
        return self.envelope_c, self.envelope_alpha


def _scalar_kernel(kernel):
    if isinstance(kernel, CustomKernel):
        f = kernel.func
        return lambda s, t: float(f(s, t))
    a, g = kernel.alpha, kernel.gamma
    if kernel.family is Family.TC:
        return lambda s, t: a ** max(s, t)
    if kernel.family is Family.DC:
        return lambda s, t: a ** max(s, t) * g ** abs(s - t)
    return lambda s, t: a ** (max(s, t) + s + t) - a ** (3 * max(s, t)) / 3.0


def _array_kernel(kernel):
    if isinstance(kernel, CustomKernel):
        return kernel.func
    from .kernels import kernel_eval

    return lambda s, t: np.asarray(kernel_eval(kernel, s, t))


def _envelope(kernel):
    C, a = kernel.envelope
    if not (0.0 < a < 1.0):
        raise ConvergenceError(
            f"decay envelope alpha={a!r} is not < 1; tail sums/integrals do not converge"
        )
    return float(C), float(a)


def ct_horizon(kernel, tol, dims=1):
    """X such that the mass of C a**((s+t)/2) beyond X is below ``tol``."""
    C, a = _envelope(kernel)
    L = abs(math.log(a))
    factor = C * (2.0 / L) ** dims * (2.0 if dims == 2 else 1.0)
    return max(0.0, 2.0 * math.log(tol / factor) / math.log(a))


def dt_horizon(kernel, tol, dims=1):
    """T such that the envelope mass over indices >= T is below ``tol``."""
    C, a = _envelope(kernel)
    r = math.sqrt(a)
    factor = C / (1.0 - r) ** dims * (2.0 if dims == 2 else 1.0)
    return max(1, int(math.ceil(2.0 * math.log(tol / factor) / math.log(a))) + 1)


def _quad(f, lo, hi, cfg, points=()):
    if hi <= lo:
        return 0.0
    pts = sorted({p for p in points if lo < p < hi})
    with warnings.catch_warnings():
        warnings.simplefilter("error", integrate.IntegrationWarning)
        try:
            val, _err = integrate.quad(
                f, lo, hi, epsabs=cfg.abs_tol, epsrel=cfg.rel_tol, limit=500,
                points=pts or None,
            )
        except integrate.IntegrationWarning as exc:
            raise ConvergenceError(f"quadrature on [{lo}, {hi}] did not converge: {exc}") from exc
    return val


def _require(kernel, domain, what):
    if kernel.domain is not domain:
        raise ArgumentError(f"{what} oracle requires a {domain.value} kernel")


# -- CT ----------------------------------------------------------------------
def oracle_psi(kernel, t, a, b, cfg=DEFAULT_CONFIG):
    _require(kernel, Domain.CT, "psi")
    if a > b:
        raise ArgumentError("psi oracle requires a <= b")
    k = _scalar_kernel(kernel)
    return _quad(lambda s: k(t, s), a, b, cfg, points=(t,))


def oracle_nu(kernel, x, y, cfg=DEFAULT_CONFIG):
    _require(kernel, Domain.CT, "nu")
    k = _scalar_kernel(kernel)
    inner_cfg = QuadratureConfig(cfg.abs_tol * 1e-2, cfg.rel_tol * 1e-2, cfg.tail_cutoff_tol)

    def inner(s):
        return _quad(lambda t: k(s, t), 0.0, y, inner_cfg, points=(s,))

    return _quad(inner, 0.0, x, cfg, points=(y,))


def oracle_nu_bar(kernel, x, cfg=DEFAULT_CONFIG):
    _require(kernel, Domain.CT, "nu_bar")
    X = max(ct_horizon(kernel, cfg.tail_cutoff_tol, dims=2), x)
    return oracle_nu(kernel, x, X, cfg)


def oracle_phi0_ct(kernel, t, cfg=DEFAULT_CONFIG):
    _require(kernel, Domain.CT, "phi0")
    X = ct_horizon(kernel, cfg.tail_cutoff_tol, dims=1) + t
    return oracle_psi(kernel, t, 0.0, X, cfg)


def oracle_phi0_norm_sq_ct(kernel, cfg=DEFAULT_CONFIG):
    _require(kernel, Domain.CT, "phi0_norm_sq")
    X = ct_horizon(kernel, cfg.tail_cutoff_tol, dims=2)
    return oracle_nu(kernel, X, X, cfg)


# -- DT ----------------------------------------------------------------------
def oracle_phi0_dt(kernel, t, cfg=DEFAULT_CONFIG):
    _require(kernel, Domain.DT, "phi0")
    k = _array_kernel(kernel)
    T = dt_horizon(kernel, cfg.tail_cutoff_tol) + int(t)
    s = np.arange(T, dtype=float)
    return float(np.sum(k(float(t), s)))


def oracle_phi0_norm_sq_dt(kernel, cfg=DEFAULT_CONFIG, chunk=512):
    _require(kernel, Domain.DT, "phi0_norm_sq")
    k = _array_kernel(kernel)
    T = dt_horizon(kernel, cfg.tail_cutoff_tol, dims=2)
    idx = np.arange(T, dtype=float)
    total = 0.0
    for lo in range(0, T, chunk):
        rows = idx[lo:lo + chunk]
        total += float(np.sum(k(rows[:, None], idx[None, :])))
    return total


_CT = {
    "psi": oracle_psi,
    "nu": oracle_nu,
    "nu_bar": oracle_nu_bar,
    "phi0": oracle_phi0_ct,
    "phi0_norm_sq": oracle_phi0_norm_sq_ct,
}
_DT = {"phi0": oracle_phi0_dt, "phi0_norm_sq": oracle_phi0_norm_sq_dt}


def kernel_oracle_integrals(kernel, quantity, *args, config=DEFAULT_CONFIG):
    """Numerically evaluate ``quantity`` for ``kernel``.

    ``quantity`` is one of ``psi(t, a, b)``, ``nu(x, y)``, ``nu_bar(x)``,
    ``phi0(t)``, ``phi0_norm_sq()``; the first three are CT only.
    """
    table = _CT if kernel.domain is Domain.CT else _DT
    try:
        fn = table[quantity]
    except KeyError:
        raise ArgumentError(
            f"unknown or unsupported oracle quantity {quantity!r} for {kernel.domain.value}"
        ) from None
    return fn(kernel, *args, cfg=config)


__all__ = [
    "CustomKernel",
    "KernelParams",
    "kernel_oracle_integrals",
    "oracle_psi",
    "oracle_nu",
    "oracle_nu_bar",
    "oracle_phi0_ct",
    "oracle_phi0_dt",
    "oracle_phi0_norm_sq_ct",
    "oracle_phi0_norm_sq_dt",
    "ct_horizon",
    "dt_horizon",
]
