"""Stable kernels (TC, DC, SS) and their closed-form functionals.

Discrete time (``Domain.DT``) uses integer time indices; continuous time
(``Domain.CT``) uses non-negative reals. The functionals are

* ``psi(t, a, b)``     -- integral of k(t, s) over s in [a, b]            (CT)
* ``nu(x, y)``         -- integral of k over [0, x] x [0, y]              (CT)
* ``nu_bar(x)``        -- integral of k over [0, x] x [0, inf)            (CT)
* ``phi0_eval(t)``     -- steady-state gain representer, sum/integral of k(t, .)
* ``phi0_norm_sq()``   -- squared RKHS norm of that representer

Closed forms are validated against :mod:`ssgain.oracle`.
"""
from dataclasses import dataclass
from enum import Enum
import math

import numpy as np

from . import _formulas as F
from .errors import ArgumentError, ParameterDomainError


class Family(str, Enum):
    TC = "TC"
    DC = "DC"
    SS = "SS"


class Domain(str, Enum):
    DT = "DT"
    CT = "CT"


_CODES = {Family.TC: F.TC, Family.DC: F.DC, Family.SS: F.SS}


@dataclass(frozen=True)
class KernelParams:
    """Hyperparameters of a standard stable kernel.

    ``gamma`` is only meaningful for DC; for TC and SS it is normalized to ``None``.
    """

    family: Family
    alpha: float
    gamma: float | None = None
    domain: Domain = Domain.DT

    def __post_init__(self):
        object.__setattr__(self, "family", Family(str(self.family).upper().split(".")[-1]))
        object.__setattr__(self, "domain", Domain(str(self.domain).upper().split(".")[-1]))
        alpha = float(self.alpha)
        if not (0.0 < alpha < 1.0) or not math.isfinite(alpha):
            raise ParameterDomainError(f"alpha must lie in (0, 1), got {self.alpha!r}")
        object.__setattr__(self, "alpha", alpha)
        if self.family is not Family.DC:
            object.__setattr__(self, "gamma", None)
            return
        if self.gamma is None:
            raise ParameterDomainError("DC kernel requires gamma")
        gamma = float(self.gamma)
        bound = alpha ** -0.5
        if self.domain is Domain.DT:
            ok = -bound < gamma < bound
        else:
            ok = 0.0 < gamma < bound
        if not ok:
            lo = -bound if self.domain is Domain.DT else 0.0
            raise ParameterDomainError(
                f"DC/{self.domain.value} gamma must lie in ({lo:g}, {bound:g}), got {gamma!r}"
            )
        object.__setattr__(self, "gamma", gamma)

    # -- derived quantities --------------------------------------------------
    @property
    def code(self):
        """Family code used by the compiled kernels (TC=0, DC=1, SS=2)."""
        if self.family is Family.DC and self.gamma == 1.0:
            return F.TC
        return _CODES[self.family]

    @property
    def log_alpha(self):
        return math.log(self.alpha)

    @property
    def log_gamma(self):
        if self.family is Family.DC and self.gamma > 0:
            return math.log(self.gamma)
        return 0.0

    @property
    def envelope(self):
        """(C, alpha) with |k(s, t)| <= C * alpha**((s + t)/2)."""
        return (4.0 / 3.0 if self.family is Family.SS else 1.0), self.alpha

    def as_dict(self):
        return {
            "family": self.family.value,
            "alpha": self.alpha,
            "gamma": self.gamma,
            "domain": self.domain.value,
        }

    @classmethod
    def from_dict(cls, d):
        return cls(d["family"], d["alpha"], d.get("gamma"), d.get("domain", "DT"))


@dataclass(frozen=True)
class QuadratureConfig:
    abs_tol: float = 1e-10
    rel_tol: float = 1e-10
    tail_cutoff_tol: float = 1e-12

    def __post_init__(self):
        for name in ("abs_tol", "rel_tol", "tail_cutoff_tol"):
            if not getattr(self, name) > 0:
                raise ArgumentError(f"{name} must be > 0")


def _require_ct(params, op):
    if params.domain is not Domain.CT:
        raise ArgumentError(f"{op} is defined for continuous-time kernels only")


def _scalar(x):
    return float(x) if np.ndim(x) == 0 else x


def _nonneg(*xs):
    for x in xs:
        if np.any(np.asarray(x) < 0):
            raise ArgumentError("time arguments must be non-negative")


# -- kernel evaluation --------------------------------------------------------
def kernel_eval(params, s, t):
    """k(s, t) for the given kernel; vectorized over ``s`` and ``t``."""
    s = np.asarray(s, dtype=float)
    t = np.asarray(t, dtype=float)
    _nonneg(s, t)
    a = params.alpha
    m = np.maximum(s, t)
    if params.family is Family.TC:
        out = np.power(a, m)
    elif params.family is Family.DC:
        out = np.power(a, m) * np.power(params.gamma, np.abs(s - t))
    else:
        out = np.power(a, m + (s + t)) - np.power(a, 3.0 * m) / 3.0
    return _scalar(out)


def kernel_matrix(params, s, t=None):
    """Matrix [k(s_i, t_j)]."""
    s = np.asarray(s, dtype=float)
    t = s if t is None else np.asarray(t, dtype=float)
    return np.asarray(kernel_eval(params, s[:, None], t[None, :]))


# -- CT functionals -----------------------------------------------------------
def eta(t, lo, hi):
    """Clamp of ``t`` to [lo, hi]."""
    return np.minimum(np.maximum(t, lo), hi)


def psi(params, t, a, b):
    """Integral of k(t, s) over s in [a, b]; requires 0 <= a <= b."""
    _require_ct(params, "psi")
    t, a, b = (np.asarray(v, dtype=float) for v in (t, a, b))
    _nonneg(t, a, b)
    if np.any(a > b):
        raise ArgumentError("psi requires a <= b")
    return _scalar(F.psi_ct(params.code, params.log_alpha, params.log_gamma, t, a, b))


def nu(params, x, y):
    """Integral of k over [0, x] x [0, y]."""
    _require_ct(params, "nu")
    x, y = np.asarray(x, dtype=float), np.asarray(y, dtype=float)
    _nonneg(x, y)
    return _scalar(F.nu_ct(params.code, params.log_alpha, params.log_gamma, x, y))


def nu_bar(params, x):
    """Integral of k over [0, x] x [0, inf)."""
    _require_ct(params, "nu_bar")
    x = np.asarray(x, dtype=float)
    _nonneg(x)
    return _scalar(F.nubar_ct(params.code, params.log_alpha, params.log_gamma, x))


# -- steady-state gain representer -------------------------------------------
def _phi0_dt(params, t):
    a = params.alpha
    at = np.power(a, t)
    if params.family is Family.TC or (params.family is Family.DC and params.gamma == 1.0):
        return (t + 1.0 / (1.0 - a)) * at
    if params.family is Family.DC:
        g = params.gamma
        if g > 0 and abs(1.0 - g) < 1e-3:
            lg = math.log(g)
            geo = g * np.expm1(t * lg) / math.expm1(lg)
        else:
            geo = (g - np.power(g, t + 1.0)) / (1.0 - g)
        return (geo + 1.0 / (1.0 - a * g)) * at
    return (
        (1.0 + a - a * at) / (1.0 - a * a)
        - at / (3.0 * (1.0 - a**3))
        - t * at / 3.0
    ) * at * at


def phi0_eval(params, t):
    """phi_0(t): sum (DT) or integral (CT) of k(t, s) over s >= 0."""
    t = np.asarray(t, dtype=float)
    _nonneg(t)
    if params.domain is Domain.DT:
        return _scalar(_phi0_dt(params, t))
    return _scalar(F.phi0_ct(params.code, params.log_alpha, params.log_gamma, t))


def phi0_norm_sq(params):
    """Squared RKHS norm of phi_0 (sum/integral of k over the whole quadrant).

    The CT values for DC and SS are the limits of ``nu_bar``: 2/(ln a ln(a g))
    and 7/(27 ln^2 a). The squared-denominator variants 2(ln a ln(a g))^-2 and
    7(27 ln a)^-2 disagree with direct double quadrature and are not used.
    """
    a = params.alpha
    if params.domain is Domain.CT:
        return float(F.norm_ct(params.code, params.log_alpha, params.log_gamma))
    if params.family is Family.TC:
        return (1.0 + a) / (1.0 - a) ** 2
    if params.family is Family.DC:
        g = params.gamma
        return (1.0 + a * g) / ((1.0 - a) * (1.0 - a * g))
    return (2.0 / 3.0) * (a**4 + a**3 + 3 * a**2 + a + 1) / ((a**3 - 1) ** 2 * (a + 1))


def tail_horizon(params, tol=1e-10):
    """Smallest T with alpha**(T/2) < tol (integer in DT, real in CT)."""
    T = 2.0 * math.log(tol) / params.log_alpha
    return int(math.ceil(T)) + 1 if params.domain is Domain.DT else T
