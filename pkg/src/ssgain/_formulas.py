"""Elementwise closed forms for the CT stable kernels.

Every function here is plain numpy and works elementwise on arrays (fallback
path); :mod:`ssgain._ctblock` jit-compiles the same functions for scalar use
inside its loops, so the formulas live in exactly one place.

Arguments are log-parameters: ``la = ln(alpha) < 0``, ``lg = ln(gamma)``.
Family codes: 0 = TC, 1 = DC, 2 = SS. For TC and SS ``lg`` is ignored.
Differences of exponentials are written with ``expm1`` to avoid cancellation
for short intervals and for gamma close to 1.
"""
import numpy as np

TC, DC, SS = 0, 1, 2

# (exp(x*lg) - 1)/lg is written inline as
#     (np.expm1(x * lg) / lg if lg != 0.0 else x)
# so these functions stay free of cross-calls and can be jitted independently.


def kernel_ct(fam, la, lg, s, t):
    m = np.maximum(s, t)
    if fam == TC:
        return np.exp(la * m)
    if fam == DC:
        return np.exp(la * m + lg * np.abs(s - t))
    return np.exp(la * (m + (s + t))) - np.exp(3.0 * la * m) / 3.0


def psi_ct(fam, la, lg, t, a, b):
    """Integral of k(t, s) over s in [a, b], a <= b."""
    eta = np.minimum(np.maximum(t, a), b)
    if fam == TC:
        return (eta - a) * np.exp(la * t) + np.exp(la * eta) * np.expm1(la * (b - eta)) / la
    if fam == DC:
        lag = la + lg
        first = -np.exp(lag * t - lg * a) * (np.expm1((a - eta) * lg) / lg if lg != 0.0 else a - eta)
        second = np.exp(lag * eta - lg * t) * np.expm1(lag * (b - eta)) / lag
        return first + second
    return (
        np.exp(la * a + 2.0 * la * t) * np.expm1(la * (eta - a)) / la
        + np.exp(2.0 * la * eta + la * t) * np.expm1(2.0 * la * (b - eta)) / (2.0 * la)
        - (eta - a) * np.exp(3.0 * la * t) / 3.0
        - np.exp(3.0 * la * eta) * np.expm1(3.0 * la * (b - eta)) / (9.0 * la)
    )


def nu_ct(fam, la, lg, x, y):
    """Double integral of k over [0, x] x [0, y]."""
    m = np.minimum(x, y)
    if fam == TC:
        return m * (np.exp(la * x) + np.exp(la * y)) / la - 2.0 * np.expm1(la * m) / (la * la)
    if fam == DC:
        lag = la + lg
        return (
            -(np.expm1(-m * lg) / lg if lg != 0.0 else -m) * (np.exp(lag * x) + np.exp(lag * y)) / lag
            - 2.0 * np.expm1(la * m) / (la * lag)
        )
    la2 = la * la
    return (
        np.expm1(la * m) * (np.exp(2.0 * la * x) + np.exp(2.0 * la * y)) / (2.0 * la2)
        - m * (np.exp(3.0 * la * x) + np.exp(3.0 * la * y)) / (9.0 * la)
        - 7.0 * np.expm1(3.0 * la * m) / (27.0 * la2)
    )


def nubar_ct(fam, la, lg, x):
    """Integral of k over [0, x] x [0, inf)."""
    if fam == TC:
        return x * np.exp(la * x) / la - 2.0 * np.expm1(la * x) / (la * la)
    if fam == DC:
        lag = la + lg
        return np.exp(la * x) * (np.expm1(x * lg) / lg if lg != 0.0 else x) / lag - 2.0 * np.expm1(la * x) / (la * lag)
    return (
        (13.0 * np.expm1(3.0 * la * x) - 27.0 * np.expm1(2.0 * la * x)) / (54.0 * la * la)
        - x * np.exp(3.0 * la * x) / (9.0 * la)
    )


def phi0_ct(fam, la, lg, t):
    if fam == TC:
        return (t - 1.0 / la) * np.exp(la * t)
    if fam == DC:
        return ((np.expm1(t * lg) / lg if lg != 0.0 else t) - 1.0 / (la + lg)) * np.exp(la * t)
    at = np.exp(la * t)
    return (11.0 * at / (18.0 * la) - 1.0 / la - t * at / 3.0) * at * at


def norm_ct(fam, la, lg):
    if fam == TC:
        return 2.0 / (la * la)
    if fam == DC:
        return 2.0 / (la * (la + lg))
    return 7.0 / (27.0 * la * la)
