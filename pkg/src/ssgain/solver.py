"""Finite-dimensional estimation problem.

    minimize   loss(A x - y) + lam * x^T Phi x
    subject to lo <= a0^T x <= hi

Squared loss uses a direct factorization; Huber and pseudo-Huber losses use
accelerated projected gradient (FISTA with adaptive restart).

Direct path. Writing x = [x0; c], Phi = [[p, a^T], [a, K]] and A = [a, K], the
stationarity condition of the equality-constrained problem is
Phi @ [lam*x0 + mult; A x - y + lam*c] = 0, which is implied by the bordered system

    [[p, a^T], [a, K + lam I]] @ [x0; c] = [delta; y],   mult = -lam * x0.

Every solution of it solves the (n+2)-dimensional KKT system
[[Q, a0], [a0^T, 0]] [x; mult] = [A^T y; delta] with Q = A^T A + lam Phi, but its
conditioning is that of Phi rather than of Phi squared. ``method="kkt"`` solves
the KKT system itself instead.

Iterative path. The problem is solved in whitened coordinates z = W^{1/2} V^T x
(Phi = V W V^T): the regularizer becomes lam |z|^2 and the slab projection stays
exact, z -> z - b0 * excess / |b0|^2 with b0 = W^{1/2} V^T a0.
"""
from dataclasses import dataclass, field
import math

import numpy as np
import scipy.linalg as sla

from .errors import ArgumentError, ConvergenceError, RankDeficiencyError

PIVOT_RTOL = 1e-12


@dataclass(frozen=True)
class Loss:
    """Empirical loss: ``squared`` (sum e^2), ``huber`` or ``pseudo_huber`` with scale sigma."""

    kind: str = "squared"
    sigma: float | None = None

    def __post_init__(self):
        kind = self.kind.lower().replace("-", "_")
        if kind in ("squarederror", "squared_error", "quadratic"):
            kind = "squared"
        if kind not in ("squared", "huber", "pseudo_huber"):
            raise ArgumentError(f"unknown loss {self.kind!r}")
        object.__setattr__(self, "kind", kind)
        if kind == "squared":
            object.__setattr__(self, "sigma", None)
        elif self.sigma is None or not float(self.sigma) > 0:
            raise ArgumentError(f"{kind} loss needs sigma > 0")
        else:
            object.__setattr__(self, "sigma", float(self.sigma))

    def value(self, e):
        e = np.asarray(e, dtype=float)
        if self.kind == "squared":
            return float(e @ e)
        return float(np.sum(self.pointwise(e)))

    def pointwise(self, e):
        e = np.asarray(e, dtype=float)
        s = self.sigma
        if self.kind == "squared":
            return e * e
        if self.kind == "huber":
            a = np.abs(e)
            return np.where(a <= s, 0.5 * e * e, s * (a - 0.5 * s))
        # as printed: (e^2 + s^2)^(1/2) - s^2; the constant offset does not move the minimizer
        return np.sqrt(e * e + s * s) - s * s

    def derivative(self, e):
        e = np.asarray(e, dtype=float)
        s = self.sigma
        if self.kind == "squared":
            return 2.0 * e
        if self.kind == "huber":
            return np.clip(e, -s, s)
        return e / np.sqrt(e * e + s * s)

    @property
    def curvature(self):
        """Upper bound on the second derivative."""
        return {"squared": 2.0, "huber": 1.0, "pseudo_huber": 1.0 / (self.sigma or 1.0)}[self.kind]


def huber(e, sigma):
    return Loss("huber", sigma).pointwise(e)


def pseudo_huber(e, sigma):
    return Loss("pseudo_huber", sigma).pointwise(e)


@dataclass(frozen=True)
class GainConstraint:
    lower: float = -math.inf
    upper: float = math.inf

    def __post_init__(self):
        lo, hi = float(self.lower), float(self.upper)
        if math.isnan(lo) or math.isnan(hi) or lo > hi or lo == math.inf or hi == -math.inf:
            raise ArgumentError(f"invalid gain interval [{self.lower}, {self.upper}]")
        object.__setattr__(self, "lower", lo)
        object.__setattr__(self, "upper", hi)

    @classmethod
    def exact(cls, delta):
        return cls(delta, delta)

    @classmethod
    def unconstrained(cls):
        return cls()

    @property
    def is_exact(self):
        return self.lower == self.upper

    @property
    def is_unconstrained(self):
        return self.lower == -math.inf and self.upper == math.inf

    def tolerance(self):
        finite = [abs(v) for v in (self.lower, self.upper) if math.isfinite(v)]
        return 1e-8 * max([1.0] + finite)

    def contains(self, value, tol=0.0):
        return self.lower - tol <= value <= self.upper + tol

    def as_dict(self):
        enc = lambda v: v if math.isfinite(v) else ("inf" if v > 0 else "-inf")
        return {"lower": enc(self.lower), "upper": enc(self.upper)}


@dataclass
class Solution:
    x: np.ndarray
    multiplier: float
    objective: float
    method: str
    iterations: int = 0
    kkt_residual: float | None = None
    converged: bool = True
    diagnostics: dict = field(default_factory=dict)


def objective(gram, y, loss, lam, x):
    x = np.asarray(x, dtype=float)
    return loss.value(gram.A @ x - y) + lam * float(x @ gram.phi @ x)


def _check(gram, y, lam):
    y = np.asarray(y, dtype=float)
    if y.shape != (gram.n,):
        raise ArgumentError(f"y must have length {gram.n}, got {y.shape}")
    if not lam > 0:
        raise ArgumentError("lambda must be > 0")
    return y


# -- symmetric indefinite factorization ---------------------------------------
def _ldl_solve(M, rhs, labels):
    """Solve the symmetric system with Bunch-Kaufman pivoting.

    Raises RankDeficiencyError when a pivot (1x1, or an eigenvalue of a 2x2
    block) is below PIVOT_RTOL * ||M||_inf; ``labels`` names the rows.
    """
    lu, d, perm = sla.ldl(M, lower=True)
    scale = max(float(np.abs(M).sum(axis=1).max()), 1e-300)
    n = len(M)
    bad = []
    i = 0
    while i < n:
        if i + 1 < n and d[i + 1, i] != 0.0:
            ev = np.linalg.eigvalsh(d[i:i + 2, i:i + 2])
            bad += [i, i + 1] if np.min(np.abs(ev)) <= PIVOT_RTOL * scale else []
            i += 2
        else:
            if abs(d[i, i]) <= PIVOT_RTOL * scale:
                bad.append(i)
            i += 1
    if bad:
        # the i-th pivot of the permuted factor belongs to original row perm[i]
        names = [labels[perm[i]] for i in bad]
        raise RankDeficiencyError(
            f"KKT matrix numerically singular; dependent rows: {', '.join(map(str, names))}", names
        )
    Lp = lu[perm]
    b = np.asarray(rhs, dtype=float)

    def solve(r):
        w = sla.solve_triangular(Lp, r[perm], lower=True, unit_diagonal=True)
        w = sla.solve(d, w, assume_a="sym")
        z = sla.solve_triangular(Lp.T, w, lower=False, unit_diagonal=True)
        out = np.empty_like(z)
        out[perm] = z
        return out

    sol = solve(b)
    for _ in range(2):  # iterative refinement
        sol = sol + solve(b - M @ sol)
    return sol


def _labels(gram):
    return ["phi_0"] + [f"phi_{i + 1} (t={t:g})" for i, t in enumerate(gram.sample_times)]


def kkt_matrix(gram, lam):
    A, phi, a0 = gram.A, gram.phi, gram.a0
    Q = A.T @ A + lam * phi
    n = len(a0)
    M = np.zeros((n + 1, n + 1))
    M[:n, :n] = Q
    M[:n, n] = a0
    M[n, :n] = a0
    return M


def kkt_residual(gram, solution, y, lam, delta):
    """||[[Q, a0], [a0^T, 0]] [x; mult] - [A^T y; delta]||_inf."""
    y = np.asarray(y, dtype=float)
    if isinstance(solution, Solution):
        x, mult = solution.x, solution.multiplier
    else:
        x, mult = solution
    x = np.asarray(x, dtype=float)
    A = gram.A
    top = A.T @ (A @ x) + lam * (gram.phi @ x) + mult * gram.a0 - A.T @ y
    bottom = gram.a0 @ x - delta
    return float(max(np.max(np.abs(top)), abs(bottom)))


def explicit_solution(gram, y, lam, delta):
    """x = Q^-1 A^T y + (delta - a0^T Q^-1 A^T y)/(a0^T Q^-1 a0) Q^-1 a0 (Phi nonsingular)."""
    A, a0 = gram.A, gram.a0
    Q = A.T @ A + lam * gram.phi
    cf = sla.cho_factor(Q)
    xu = sla.cho_solve(cf, A.T @ y)
    qa = sla.cho_solve(cf, a0)
    return xu + (delta - a0 @ xu) / (a0 @ qa) * qa


def solve_closed_form(gram, y, lam, delta, method="bordered", cross_check=True):
    """Exact-gain, squared-loss solution."""
    y = _check(gram, y, lam)
    delta = float(delta)
    n = gram.n
    if method == "kkt":
        M = kkt_matrix(gram, lam)
        rhs = np.concatenate([gram.A.T @ y, [delta]])
        sol = _ldl_solve(M, rhs, _labels(gram) + ["gain constraint"])
        x, mult = sol[:n + 1], float(sol[n + 1])
    elif method == "bordered":
        M = gram.phi + lam * np.diag(np.r_[0.0, np.ones(n)])
        rhs = np.concatenate([[delta], y])
        x = _ldl_solve(M, rhs, _labels(gram))
        x[gram.zero_representers()] = 0.0
        mult = -lam * float(x[0])
    else:
        raise ArgumentError(f"unknown closed-form method {method!r}")
    diag = {}
    if cross_check:
        try:
            w = np.linalg.eigvalsh(gram.phi)
            if w[0] > 1e-8 * w[-1]:
                xe = explicit_solution(gram, y, lam, delta)
                diag["explicit_rel_diff"] = float(
                    np.linalg.norm(xe - x) / max(np.linalg.norm(x), 1e-300)
                )
        except (np.linalg.LinAlgError, sla.LinAlgError):
            pass
    res = kkt_residual(gram, (x, mult), y, lam, delta)
    return Solution(x, mult, objective(gram, y, Loss(), lam, x), f"closed_form/{method}",
                    kkt_residual=res, diagnostics=diag)


def solve_ridge(gram, y, lam):
    """Unconstrained squared-loss solution: plain kernel ridge on phi_1..phi_n."""
    y = _check(gram, y, lam)
    Kmat = gram.phi[1:, 1:] + lam * np.eye(gram.n)
    c = sla.solve(Kmat, y, assume_a="pos")
    x = np.concatenate([[0.0], c])
    x[gram.zero_representers()] = 0.0
    return Solution(x, 0.0, objective(gram, y, Loss(), lam, x), "ridge")


# -- iterative ------------------------------------------------------------------
def _whiten(phi, rtol=1e-13):
    w, V = np.linalg.eigh(0.5 * (phi + phi.T))
    keep = w > rtol * max(w[-1], 1e-300)
    sw = np.sqrt(w[keep])
    return V[:, keep] * sw, V[:, keep] / sw  # R (Phi ~ R R^T), and x = S z


def solve_iterative(gram, y, loss, lam, constraint, tol=None, max_iter=100_000, x_init=None):
    """Accelerated projected gradient in whitened coordinates."""
    y = _check(gram, y, lam)
    R, S = _whiten(gram.phi)
    B, b0 = R[1:], R[0]
    lo, hi = constraint.lower, constraint.upper
    bb = float(b0 @ b0)
    if bb == 0.0 and not (lo <= 0.0 <= hi):
        raise ArgumentError("gain functional vanishes on the span; constraint infeasible")

    def project(z):
        if bb == 0.0:
            return z
        g = float(b0 @ z)
        c = min(max(g, lo), hi)
        return z if c == g else z - b0 * ((g - c) / bb)

    def grad(z):
        return B.T @ loss.derivative(B @ z - y) + 2.0 * lam * z

    Lf = loss.curvature * float(np.linalg.norm(B, 2)) ** 2 + 2.0 * lam
    step = 1.0 / Lf
    aty = gram.A.T @ y
    stop = (1e-8 if tol is None else tol) * (1.0 + float(np.max(np.abs(aty), initial=0.0)))
    z = project(np.zeros(R.shape[1]) if x_init is None else R.T @ np.asarray(x_init, dtype=float))
    v, theta = z.copy(), 1.0
    pg = math.inf
    it = 0
    for it in range(1, max_iter + 1):
        gv = grad(v)
        z_new = project(v - step * gv)
        # gradient-mapping norm, mapped back to x-gradient units
        if it % 10 == 0 or it == 1:
            gm = (v - z_new) / step
            pg = float(np.max(np.abs(R @ gm)))
            if pg <= stop:
                z = z_new
                break
        theta_new = 0.5 * (1.0 + math.sqrt(1.0 + 4.0 * theta * theta))
        if float((v - z_new) @ (z_new - z)) > 0.0:  # adaptive restart
            theta_new, mom = 1.0, 0.0
        else:
            mom = (theta - 1.0) / theta_new
        v = z_new + mom * (z_new - z)
        z, theta = z_new, theta_new
    else:
        raise ConvergenceError(
            f"projected gradient did not converge in {max_iter} iterations "
            f"(projected-gradient norm {pg:.3e} > {stop:.3e})", residual=pg
        )
    x = S @ z
    gain = float(gram.a0 @ x)
    mult = 0.0
    if bb > 0 and (gain <= lo + constraint.tolerance() or gain >= hi - constraint.tolerance()):
        g = grad(z)
        mult = -float(b0 @ g) / bb / 2.0 if loss.kind == "squared" else -float(b0 @ g) / bb
    return Solution(x, mult, objective(gram, y, loss, lam, x), "projected_gradient",
                    iterations=it, diagnostics={"pg_norm": pg, "stop": stop})


def solve_general(gram, y, loss=Loss(), lam=1.0, constraint=GainConstraint(), method="auto", **kw):
    """Solve the slab-constrained problem for any supported loss."""
    y = _check(gram, y, lam)
    if method == "iterative" or (method == "auto" and loss.kind != "squared"):
        return solve_iterative(gram, y, loss, lam, constraint, **kw)
    if loss.kind != "squared":
        raise ArgumentError("direct solution requires squared loss")
    if constraint.is_exact:
        return solve_closed_form(gram, y, lam, constraint.lower, cross_check=False)
    sol = solve_ridge(gram, y, lam)
    gain = float(gram.a0 @ sol.x)
    if constraint.contains(gain):
        return sol
    # convex problem: the minimizer over the slab sits on the violated endpoint
    bound = constraint.lower if gain < constraint.lower else constraint.upper
    out = solve_closed_form(gram, y, lam, bound, cross_check=False)
    out.method = f"closed_form/active={'lower' if bound == constraint.lower else 'upper'}"
    return out
