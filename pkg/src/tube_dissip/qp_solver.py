"""Dense convex QP solver with KKT certification.

Solves

    min  1/2 x' H x + g' x + c0
    s.t. Aeq x = beq,  Ain x <= bin,  lb <= x <= ub

for small dense problems with positive semidefinite H.  The algorithm is an
operator-splitting (ADMM) iteration on the stacked row form ``l <= A x <= u``
with a direct active-set polish step: once the iterates are roughly converged
the active rows are identified, the equality-constrained KKT system is solved
by least squares, and multipliers are recovered by nonnegative least squares.
A polished solution is accepted only if the full KKT residual passes the
solver tolerance, so an ``OPTIMAL`` status always carries a certificate.

Primal infeasibility and unboundedness are detected from the divergence
certificates of the ADMM iterates (the standard operator-splitting tests on
the successive dual / primal differences).

The contract of this module is the returned KKT certificate, not the
algorithm; every optimization in this package goes through :func:`solve`.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass
from enum import Enum
from typing import Optional

import numpy as np
import scipy.linalg as sla
from scipy.optimize import nnls

__all__ = [
    "QpStatus",
    "QpProblem",
    "QpSolution",
    "SolverSettings",
    "QpBuilder",
    "SolverFailure",
    "solve",
    "verify_kkt",
]

_INF = float("inf")


class QpStatus(Enum):
    OPTIMAL = "optimal"
    INFEASIBLE = "infeasible"
    UNBOUNDED = "unbounded"
    MAX_ITERATIONS = "max_iterations"


class SolverFailure(RuntimeError):
    """Raised by callers when a solve does not terminate with a usable status."""


@dataclass(frozen=True)
class SolverSettings:
    kkt_tol: float = 1e-8
    feas_tol: float = 1e-8
    max_iter: int = 10000
    sigma: float = 1e-6
    alpha: float = 1.6
    rho: float = 1.0
    rho_eq_scale: float = 1e3
    check_every: int = 25
    cert_tol: float = 1e-10
    # residual levels at which an active-set polish is attempted; the polish
    # self-verifies against kkt_tol, so these only trade attempt frequency
    # against iteration count
    polish_gate_prim: float = 1e-1
    polish_gate_dual: float = 1e0


DEFAULT_SETTINGS = SolverSettings()


@dataclass(frozen=True)
class QpProblem:
    """Dense convex QP data.  Missing blocks are passed as ``None``."""

    H: np.ndarray
    g: np.ndarray
    c0: float = 0.0
    Aeq: Optional[np.ndarray] = None
    beq: Optional[np.ndarray] = None
    Ain: Optional[np.ndarray] = None
    bin: Optional[np.ndarray] = None
    lb: Optional[np.ndarray] = None
    ub: Optional[np.ndarray] = None

    def __post_init__(self):
        H = np.atleast_2d(np.asarray(self.H, dtype=float))
        g = np.asarray(self.g, dtype=float).ravel()
        n = g.size
        if H.shape != (n, n):
            raise ValueError(f"H has shape {H.shape}, expected ({n}, {n})")
        if np.max(np.abs(H - H.T), initial=0.0) > 1e-12:
            raise ValueError("H must be symmetric within 1e-12")
        object.__setattr__(self, "H", H)
        object.__setattr__(self, "g", g)
        for mat_name, vec_name in (("Aeq", "beq"), ("Ain", "bin")):
            mat = getattr(self, mat_name)
            vec = getattr(self, vec_name)
            if (mat is None) != (vec is None):
                raise ValueError(f"{mat_name} and {vec_name} must be given together")
            if mat is not None:
                mat = np.atleast_2d(np.asarray(mat, dtype=float))
                vec = np.asarray(vec, dtype=float).ravel()
                if mat.shape != (vec.size, n):
                    raise ValueError(f"{mat_name} has shape {mat.shape}, expected ({vec.size}, {n})")
                object.__setattr__(self, mat_name, mat)
                object.__setattr__(self, vec_name, vec)
        for name in ("lb", "ub"):
            v = getattr(self, name)
            if v is not None:
                v = np.asarray(v, dtype=float).ravel()
                if v.size != n:
                    raise ValueError(f"{name} has length {v.size}, expected {n}")
                object.__setattr__(self, name, v)
        if self.lb is not None and self.ub is not None and np.any(self.lb > self.ub):
            raise ValueError("lb must be <= ub componentwise")

    @property
    def n(self) -> int:
        return self.g.size

    def objective_value(self, x: np.ndarray) -> float:
        return float(0.5 * x @ self.H @ x + self.g @ x + self.c0)

    def to_json_dict(self) -> dict:
        """Debug dump: dense matrices in row-major nested lists."""

        def arr(a):
            return None if a is None else np.asarray(a).tolist()

        return {
            "H": arr(self.H),
            "g": arr(self.g),
            "c0": self.c0,
            "Aeq": arr(self.Aeq),
            "beq": arr(self.beq),
            "Ain": arr(self.Ain),
            "bin": arr(self.bin),
            "lb": arr(self.lb),
            "ub": arr(self.ub),
        }


@dataclass(frozen=True)
class QpSolution:
    status: QpStatus
    x: Optional[np.ndarray] = None
    objective: Optional[float] = None
    eq_multipliers: Optional[np.ndarray] = None
    ineq_multipliers: Optional[np.ndarray] = None
    lb_multipliers: Optional[np.ndarray] = None
    ub_multipliers: Optional[np.ndarray] = None
    kkt_residual: Optional[float] = None
    iterations: int = 0
    polished: bool = False
    infeasibility_certificate: Optional[dict] = None
    unbounded_ray: Optional[np.ndarray] = None


# ---------------------------------------------------------------------------
# stacked row form


class _RowForm:
    """Internal ``l <= A x <= u`` stacking of eq rows, ineq rows, and bounds."""

    def __init__(self, qp: QpProblem):
        n = qp.n
        blocks, lows, highs = [], [], []
        self.n_eq = 0 if qp.Aeq is None else qp.beq.size
        self.n_in = 0 if qp.Ain is None else qp.bin.size
        if qp.Aeq is not None:
            blocks.append(qp.Aeq)
            lows.append(qp.beq)
            highs.append(qp.beq)
        if qp.Ain is not None:
            blocks.append(qp.Ain)
            lows.append(np.full(self.n_in, -_INF))
            highs.append(qp.bin)
        lb = qp.lb if qp.lb is not None else np.full(n, -_INF)
        ub = qp.ub if qp.ub is not None else np.full(n, _INF)
        self.bounded = np.where(np.isfinite(lb) | np.isfinite(ub))[0]
        if self.bounded.size:
            eye = np.zeros((self.bounded.size, n))
            eye[np.arange(self.bounded.size), self.bounded] = 1.0
            blocks.append(eye)
            lows.append(lb[self.bounded])
            highs.append(ub[self.bounded])
        if blocks:
            self.A = np.vstack(blocks)
            self.l = np.concatenate(lows)
            self.u = np.concatenate(highs)
        else:
            self.A = np.zeros((0, n))
            self.l = np.zeros(0)
            self.u = np.zeros(0)
        self.m = self.A.shape[0]
        self.eq_mask = np.zeros(self.m, dtype=bool)
        self.eq_mask[: self.n_eq] = True

    def split_multipliers(self, y: np.ndarray, n: int):
        """Map row duals to (eq, ineq, lb, ub) block multipliers."""
        lam = y[: self.n_eq].copy()
        mu = np.maximum(y[self.n_eq : self.n_eq + self.n_in], 0.0)
        mu_lb = np.zeros(n)
        mu_ub = np.zeros(n)
        yb = y[self.n_eq + self.n_in :]
        mu_ub[self.bounded] = np.maximum(yb, 0.0)
        mu_lb[self.bounded] = np.maximum(-yb, 0.0)
        return lam, mu, mu_lb, mu_ub


# ---------------------------------------------------------------------------
# KKT residual


def _kkt_residual(qp: QpProblem, x, lam, mu, mu_lb, mu_ub) -> float:
    n = qp.n
    grad = qp.H @ x + qp.g
    if qp.Aeq is not None and lam is not None:
        grad = grad + qp.Aeq.T @ lam
    if qp.Ain is not None and mu is not None:
        grad = grad + qp.Ain.T @ mu
    if mu_ub is not None:
        grad = grad + mu_ub
    if mu_lb is not None:
        grad = grad - mu_lb
    res = float(np.max(np.abs(grad), initial=0.0))
    if qp.Aeq is not None:
        res = max(res, float(np.max(np.abs(qp.Aeq @ x - qp.beq), initial=0.0)))
    if qp.Ain is not None:
        slack = qp.bin - qp.Ain @ x
        res = max(res, float(np.max(-slack, initial=0.0)))
        if mu is not None:
            res = max(res, float(np.max(-mu, initial=0.0)))
            res = max(res, float(np.max(np.abs(mu * slack), initial=0.0)))
    if qp.ub is not None and mu_ub is not None:
        s = qp.ub - x
        fin = np.isfinite(qp.ub)
        res = max(res, float(np.max(-s[fin], initial=0.0)))
        res = max(res, float(np.max(np.abs(mu_ub[fin] * s[fin]), initial=0.0)))
        res = max(res, float(np.max(mu_ub[~fin], initial=0.0)))
    if qp.lb is not None and mu_lb is not None:
        s = x - qp.lb
        fin = np.isfinite(qp.lb)
        res = max(res, float(np.max(-s[fin], initial=0.0)))
        res = max(res, float(np.max(np.abs(mu_lb[fin] * s[fin]), initial=0.0)))
        res = max(res, float(np.max(mu_lb[~fin], initial=0.0)))
    return res


def verify_kkt(qp: QpProblem, sol: QpSolution, tol: float) -> bool:
    """Recompute all KKT residuals of an Optimal solution from its multipliers."""
    if sol.status is not QpStatus.OPTIMAL:
        raise ValueError("verify_kkt expects an Optimal solution")
    return (
        _kkt_residual(
            qp,
            sol.x,
            sol.eq_multipliers,
            sol.ineq_multipliers,
            sol.lb_multipliers,
            sol.ub_multipliers,
        )
        <= tol
    )


# ---------------------------------------------------------------------------
# polish


def _try_polish(H, g, A, l, u, z, y, slack_tol, dual_tol, feas_tol):
    n = H.shape[0]
    m = A.shape[0]
    eq = (u - l) < 1e-14
    labs = np.where(np.isfinite(l), np.abs(l), 0.0)
    uabs = np.where(np.isfinite(u), np.abs(u), 0.0)
    low = (~eq) & ((y < -dual_tol) | (z - l < slack_tol * (1.0 + labs))) & np.isfinite(l)
    upp = (~eq) & ((y > dual_tol) | (u - z < slack_tol * (1.0 + uabs))) & np.isfinite(u)
    both = low & upp
    low &= ~(both & (y >= 0))
    upp &= ~(both & (y < 0))
    act = np.where(low | upp | eq)[0]
    k = act.size
    b_act = np.where(eq[act] | upp[act], u[act], l[act])
    Aa = A[act]
    kkt = np.zeros((n + k, n + k))
    kkt[:n, :n] = H
    kkt[:n, n:] = Aa.T
    kkt[n:, :n] = Aa
    rhs = np.concatenate([-g, b_act])
    sol_vec, *_ = np.linalg.lstsq(kkt, rhs, rcond=None)
    xp = sol_vec[:n]
    if not np.all(np.isfinite(xp)):
        return None
    Ax = A @ xp
    viol = max(np.max(Ax - u, initial=0.0), np.max(l - Ax, initial=0.0))
    if viol > feas_tol:
        return None
    if k and np.max(np.abs(Aa @ xp - b_act)) > 10 * feas_tol:
        return None
    if k:
        # multipliers via NNLS: flip lower-active columns, split equality
        # columns into +/- so every coefficient is sign-constrained >= 0
        sign = np.where(upp[act], 1.0, np.where(eq[act], 1.0, -1.0))
        cols = Aa.T * sign
        eq_act = eq[act]
        if np.any(eq_act):
            cols = np.hstack([cols, -Aa.T[:, eq_act]])
        mu_nn, _ = nnls(cols, -(H @ xp + g))
        y_act = sign * mu_nn[:k]
        if np.any(eq_act):
            y_act[eq_act] -= mu_nn[k:]
        stat = float(np.max(np.abs(H @ xp + g + Aa.T @ y_act), initial=0.0))
    else:
        y_act = np.zeros(0)
        stat = float(np.max(np.abs(H @ xp + g), initial=0.0))
    if stat > feas_tol:
        return None
    y_full = np.zeros(m)
    y_full[act] = y_act
    return xp, y_full


# ---------------------------------------------------------------------------
# factorization cache (keyed by problem structure; bounds/rhs may vary freely)

_FACTOR_CACHE: dict[bytes, tuple] = {}
_FACTOR_CACHE_MAX = 64


def _initial_factor(H, A, sigma, rho):
    key = hashlib.sha1()
    key.update(H.tobytes())
    key.update(A.tobytes())
    key.update(np.asarray([sigma]).tobytes())
    key.update(rho.tobytes())
    digest = key.digest()
    hit = _FACTOR_CACHE.get(digest)
    if hit is not None:
        return hit
    lu = _factor(H, A, sigma, rho)
    if len(_FACTOR_CACHE) >= _FACTOR_CACHE_MAX:
        _FACTOR_CACHE.clear()
    _FACTOR_CACHE[digest] = lu
    return lu


def _factor(H, A, sigma, rho):
    n = H.shape[0]
    m = A.shape[0]
    kkt = np.zeros((n + m, n + m))
    kkt[:n, :n] = H + sigma * np.eye(n)
    kkt[:n, n:] = A.T
    kkt[n:, :n] = A
    kkt[n:, n:] = -np.diag(1.0 / rho)
    return sla.lu_factor(kkt)


# ---------------------------------------------------------------------------
# main solve


def solve(qp: QpProblem, settings: SolverSettings = DEFAULT_SETTINGS,
          x0: Optional[np.ndarray] = None) -> QpSolution:
    """Solve a dense convex QP, returning a KKT-certified solution.

    ``x0`` is an optional internal starting point; it affects the iteration
    path, never the reported optimum of a strictly convex problem.
    """
    rows = _RowForm(qp)
    n, m = qp.n, rows.m
    A, l, u = rows.A, rows.l, rows.u

    if m == 0:
        return _solve_unconstrained(qp, settings)

    # constant rows (all-zero coefficients) are decided immediately
    zero_rows = ~np.any(A != 0.0, axis=1)
    if np.any(zero_rows):
        bad = zero_rows & ((l > settings.feas_tol) | (u < -settings.feas_tol))
        if np.any(bad):
            i = int(np.where(bad)[0][0])
            ray = np.zeros(m)
            ray[i] = 1.0 if u[i] < 0 else -1.0
            lam, mu, mu_lb, mu_ub = rows.split_multipliers(ray, n)
            return QpSolution(
                status=QpStatus.INFEASIBLE,
                infeasibility_certificate={"eq": lam, "ineq": mu, "lb": mu_lb, "ub": mu_ub},
            )

    rho = np.where(rows.eq_mask, settings.rho_eq_scale * settings.rho, settings.rho)
    lu = _initial_factor(qp.H, A, settings.sigma, rho)

    x = np.zeros(n) if x0 is None else np.asarray(x0, dtype=float).copy()
    z = np.clip(A @ x, l, u)
    y = np.zeros(m)
    rhs = np.empty(n + m)
    check_every = min(settings.check_every, 10) if n + m < 40 else settings.check_every
    sig, alph = settings.sigma, settings.alpha

    for it in range(1, settings.max_iter + 1):
        rhs[:n] = sig * x - qp.g
        rhs[n:] = z - y / rho
        sol_vec = sla.lu_solve(lu, rhs)
        x_t = sol_vec[:n]
        nu = sol_vec[n:]
        z_t = z + (nu - y) / rho
        x_new = alph * x_t + (1.0 - alph) * x
        z_rel = alph * z_t + (1.0 - alph) * z
        z_new = np.clip(z_rel + y / rho, l, u)
        y_new = y + rho * (z_rel - z_new)
        dx = x_new - x
        dy = y_new - y
        x, z, y = x_new, z_new, y_new

        if it % check_every and it != settings.max_iter:
            continue

        r_prim = float(np.max(np.abs(A @ x - z), initial=0.0))
        r_dual = float(np.max(np.abs(qp.H @ x + qp.g + A.T @ y), initial=0.0))

        if r_prim < settings.polish_gate_prim and r_dual < settings.polish_gate_dual:
            for st, dt in ((1e-6, 1e-6), (1e-5, 1e-7), (1e-4, 1e-5)):
                pol = _try_polish(qp.H, qp.g, A, l, u, z, y, st, dt, settings.feas_tol)
                if pol is None:
                    continue
                xp, yp = pol
                lam, mu, mu_lb, mu_ub = rows.split_multipliers(yp, n)
                res = _kkt_residual(qp, xp, lam, mu, mu_lb, mu_ub)
                if res <= settings.kkt_tol:
                    return QpSolution(
                        status=QpStatus.OPTIMAL,
                        x=xp,
                        objective=qp.objective_value(xp),
                        eq_multipliers=lam,
                        ineq_multipliers=mu,
                        lb_multipliers=mu_lb,
                        ub_multipliers=mu_ub,
                        kkt_residual=res,
                        iterations=it,
                        polished=True,
                    )

        if r_prim < settings.feas_tol and r_dual < settings.kkt_tol:
            lam, mu, mu_lb, mu_ub = rows.split_multipliers(y, n)
            res = _kkt_residual(qp, x, lam, mu, mu_lb, mu_ub)
            if res <= 10 * settings.kkt_tol:
                return QpSolution(
                    status=QpStatus.OPTIMAL,
                    x=x.copy(),
                    objective=qp.objective_value(x),
                    eq_multipliers=lam,
                    ineq_multipliers=mu,
                    lb_multipliers=mu_lb,
                    ub_multipliers=mu_ub,
                    kkt_residual=res,
                    iterations=it,
                )

        cert = _primal_infeasibility_cert(A, l, u, dy, settings.cert_tol, settings.feas_tol)
        if cert is not None:
            lam, mu, mu_lb, mu_ub = rows.split_multipliers(cert, n)
            return QpSolution(
                status=QpStatus.INFEASIBLE,
                iterations=it,
                infeasibility_certificate={"eq": lam, "ineq": mu, "lb": mu_lb, "ub": mu_ub},
            )
        ray = _dual_infeasibility_cert(qp.H, qp.g, A, l, u, dx, settings.cert_tol)
        if ray is not None:
            return QpSolution(status=QpStatus.UNBOUNDED, iterations=it, unbounded_ray=ray)

        # residual-balancing rho update on the inequality rows
        if it % 100 == 0 and it < settings.max_iter // 2:
            ratio = r_prim / max(r_dual, 1e-12)
            if ratio > 5.0 or ratio < 0.2:
                scale = float(np.clip(np.sqrt(ratio), 0.1, 10.0))
                rho = np.where(rows.eq_mask, rho, np.clip(rho * scale, 1e-4, 1e4))
                lu = _factor(qp.H, A, settings.sigma, rho)

    return QpSolution(status=QpStatus.MAX_ITERATIONS, x=x.copy(), iterations=settings.max_iter)


def _solve_unconstrained(qp: QpProblem, settings: SolverSettings) -> QpSolution:
    x, *_ = np.linalg.lstsq(qp.H, -qp.g, rcond=None)
    grad = qp.H @ x + qp.g
    if np.max(np.abs(grad), initial=0.0) > settings.kkt_tol:
        # residual of the least-squares solve lies in the null space of H
        return QpSolution(status=QpStatus.UNBOUNDED, unbounded_ray=-grad)
    return QpSolution(
        status=QpStatus.OPTIMAL,
        x=x,
        objective=qp.objective_value(x),
        eq_multipliers=None,
        ineq_multipliers=None,
        lb_multipliers=np.zeros(qp.n),
        ub_multipliers=np.zeros(qp.n),
        kkt_residual=float(np.max(np.abs(grad), initial=0.0)),
    )


def _primal_infeasibility_cert(A, l, u, dy, tol, feas_tol):
    scale = float(np.max(np.abs(dy), initial=0.0))
    if scale <= 1e-12:
        return None
    v = dy / scale
    pos = v > tol
    neg = v < -tol
    if not (np.all(np.isfinite(u[pos])) and np.all(np.isfinite(l[neg]))):
        return None
    support = float(np.sum(u[pos] * v[pos]) + np.sum(l[neg] * v[neg]))
    # the ray certifies that every point violates some row by at least
    # -support / ||v||_1; only declare infeasibility beyond the feasibility
    # tolerance, so marginal problems resolve as feasible, not infeasible
    l1 = float(np.sum(np.abs(v)))
    if support < -(feas_tol * l1 + tol) and float(np.max(np.abs(A.T @ v), initial=0.0)) < tol:
        return v
    return None


def _dual_infeasibility_cert(H, g, A, l, u, dx, tol):
    scale = float(np.max(np.abs(dx), initial=0.0))
    if scale <= 1e-12:
        return None
    w = dx / scale
    if float(np.max(np.abs(H @ w), initial=0.0)) >= tol or g @ w >= -tol:
        return None
    Aw = A @ w
    if np.all(Aw[np.isfinite(u)] < tol) and np.all(Aw[np.isfinite(l)] > -tol):
        return w
    return None


# ---------------------------------------------------------------------------
# incremental problem builder


class QpBuilder:
    """Accumulates variables, diagonal quadratic costs, rows, and bounds.

    Quadratic terms are added as coefficients of ``x_i**2`` (so a weight ``w``
    contributes ``2 w`` to the Hessian diagonal).  Rows are two-sided
    ``lo <= sum coef*x <= hi`` and are split into equality and one-sided
    inequality blocks when the :class:`QpProblem` is assembled.  Rows with no
    variable entries are kept as constant feasibility assertions.
    """

    def __init__(self):
        self._quad: dict[int, float] = {}
        self._lin: dict[int, float] = {}
        self._const = 0.0
        self._lb: list[float] = []
        self._ub: list[float] = []
        self._rows: list[tuple[dict[int, float], float, float]] = []

    @property
    def n_vars(self) -> int:
        return len(self._lb)

    def new_var(self, lb: float = -_INF, ub: float = _INF) -> int:
        self._lb.append(lb)
        self._ub.append(ub)
        return len(self._lb) - 1

    def new_vars(self, k: int, lb: float = -_INF, ub: float = _INF) -> list[int]:
        return [self.new_var(lb, ub) for _ in range(k)]

    def bound(self, i: int, lo: float = -_INF, hi: float = _INF) -> None:
        """Tighten the box bounds of variable ``i``."""
        self._lb[i] = max(self._lb[i], lo)
        self._ub[i] = min(self._ub[i], hi)

    def add_quad(self, i: int, w: float) -> None:
        self._quad[i] = self._quad.get(i, 0.0) + w

    def add_lin(self, i: int, c: float) -> None:
        self._lin[i] = self._lin.get(i, 0.0) + c

    def add_const(self, c: float) -> None:
        self._const += c

    def add_row(self, coeffs: dict[int, float], lo: float, hi: float) -> None:
        self._rows.append((dict(coeffs), lo, hi))

    def build(self) -> QpProblem:
        n = self.n_vars
        H = np.zeros((n, n))
        for i, w in self._quad.items():
            H[i, i] = 2.0 * w
        g = np.zeros(n)
        for i, c in self._lin.items():
            g[i] = c
        eq_rows, eq_rhs, in_rows, in_rhs = [], [], [], []
        for coeffs, lo, hi in self._rows:
            row = np.zeros(n)
            for i, c in coeffs.items():
                row[i] += c
            if hi - lo < 1e-14 and np.isfinite(lo):
                eq_rows.append(row)
                eq_rhs.append(hi)
                continue
            if np.isfinite(hi):
                in_rows.append(row)
                in_rhs.append(hi)
            if np.isfinite(lo):
                in_rows.append(-row)
                in_rhs.append(-lo)
        lb = np.array(self._lb)
        ub = np.array(self._ub)
        bad = lb > ub
        if np.any(bad):
            # conflicting accumulated bounds are re-emitted as ordinary rows,
            # so the solver's feasibility tolerance decides uniformly whether
            # the conflict is noise or a genuine (certified) infeasibility
            for i in np.where(bad)[0]:
                row = np.zeros(n)
                row[i] = 1.0
                in_rows.append(row.copy())
                in_rhs.append(ub[i])
                in_rows.append(-row)
                in_rhs.append(-lb[i])
            lb[bad] = -_INF
            ub[bad] = _INF
        return QpProblem(
            H=H,
            g=g,
            c0=self._const,
            Aeq=np.array(eq_rows) if eq_rows else None,
            beq=np.array(eq_rhs) if eq_rhs else None,
            Ain=np.array(in_rows) if in_rows else None,
            bin=np.array(in_rhs) if in_rhs else None,
            lb=lb if np.any(np.isfinite(lb)) else None,
            ub=ub if np.any(np.isfinite(ub)) else None,
        )
